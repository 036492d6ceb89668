#pragma once

// Dirichlet-to-Neumann map of a rotation-invariant conductivity on the unit
// disk. Mode n: (r k u')' = n^2 k u / r with u regular at 0 and u(1) = 1;
// lambda_n = k(1) u'(1). With w = r u'/u and t = ln r this becomes the
// Riccati equation dw/dt = n^2 - w^2 - r (k'/k) w, w -> n as r -> 0.

#include "bdlab/conductivity.hpp"
#include "bdlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bdlab {

struct DtNOperator {
  int n_max = 0;
  std::vector<double> eigenvalues;  ///< lambda_0 .. lambda_{n_max}
  std::string kappa_label;

  double lambda(int n) const { return eigenvalues.at(static_cast<std::size_t>(std::abs(n))); }
};

/// Exact operator for constant kappa = a: lambda_n = a n.
inline DtNOperator dtn_constant(double a, int n_max) {
  DtNOperator op;
  op.n_max = n_max;
  op.kappa_label = "constant(" + std::to_string(a) + ")";
  for (int n = 0; n <= n_max; ++n) op.eigenvalues.push_back(a * n);
  return op;
}

namespace detail {

/// Integrates the Riccati equation for mode n with classical RK4 in t = ln r
/// from r0 to 1 using `steps` uniform steps; returns w(1).
inline double riccati_rk4(int n, const std::function<double(double)>& log_slope, double r0, double w0, int steps) {
  const double t0 = std::log(r0);
  const double h = -t0 / steps;
  const double n2 = static_cast<double>(n) * n;
  auto rhs = [&](double t, double w) {
    const double r = std::exp(t);
    return n2 - w * w - r * log_slope(r) * w;
  };
  double w = w0;
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    const double k1 = rhs(t, w);
    const double k2 = rhs(t + 0.5 * h, w + 0.5 * h * k1);
    const double k3 = rhs(t + 0.5 * h, w + 0.5 * h * k2);
    const double k4 = rhs(t + h, w + h * k3);
    w += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return w;
}

}  // namespace detail

struct DtNSolveOptions {
  double tolerance = 1e-10;  ///< relative Richardson error target per eigenvalue
  int max_doublings = 12;
};

/// Eigenvalues for a radial profile kappa(r) with derivative dkappa(r).
inline DtNOperator dtn_eigenvalues_radial(const std::function<double(double)>& kappa,
                                          const std::function<double(double)>& dkappa, int n_max,
                                          std::string label = "radial", DtNSolveOptions opt = {}) {
  if (n_max < 0) throw PreconditionError("n_max must be nonnegative");
  for (int i = 0; i <= 1000; ++i) {
    const double k = kappa(i / 1000.0);
    if (!(k > 0.0) || !std::isfinite(k)) throw PreconditionError("radial profile is not elliptic on [0, 1]");
  }
  auto log_slope = [&](double r) { return dkappa(r) / kappa(r); };
  // Series start: w = n + a r^2 with a = -n k''(0) / (2 k(0) (n + 1)), k''(0) by differences.
  const double r0 = 1e-3;
  const double h = 1e-3;
  const double k0 = kappa(0.0);
  const double kpp0 = 2.0 * (kappa(h) - k0) / (h * h);  // kappa is even in r
  const double k1 = kappa(1.0);

  DtNOperator op;
  op.n_max = n_max;
  op.kappa_label = std::move(label);
  op.eigenvalues.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int n = 1; n <= n_max; ++n) {
    const double a = -n * kpp0 / (2.0 * k0 * (n + 1));
    const double w0 = n + a * r0 * r0;
    // Step count keeps h * n small; the Riccati flow is stiff with rate 2n.
    int steps = std::max(200, 40 * n);
    double coarse = detail::riccati_rk4(n, log_slope, r0, w0, steps);
    double fine = coarse;
    bool converged = false;
    for (int d = 0; d < opt.max_doublings; ++d) {
      steps *= 2;
      fine = detail::riccati_rk4(n, log_slope, r0, w0, steps);
      if (std::abs(fine - coarse) / 15.0 <= opt.tolerance * std::max(1.0, std::abs(fine))) {
        converged = true;
        break;
      }
      coarse = fine;
    }
    if (!converged) throw SolverError("DtN mode " + std::to_string(n) + " failed the Richardson check");
    op.eigenvalues[static_cast<std::size_t>(n)] = k1 * (fine + (fine - coarse) / 15.0);
  }
  return op;
}

/// Eigenvalues for a rotation-invariant conductivity field.
inline DtNOperator dtn_eigenvalues_radial(const ConductivityField& field, int n_max, DtNSolveOptions opt = {}) {
  if (!field.rotation_invariant() || !field.isotropic())
    throw PreconditionError("dtn_eigenvalues_radial needs a rotation-invariant isotropic field");
  if (field.is_constant()) {
    DtNOperator op = dtn_constant(field.scalar(Vec2::Zero()), n_max);
    op.kappa_label = field.label();
    return op;
  }
  auto kappa = [&field](double r) { return field.scalar(Vec2(r, 0.0)); };
  auto dkappa = [&field](double r) { return field.grad_div(Vec2(r, 0.0)).x(); };
  return dtn_eigenvalues_radial(kappa, dkappa, n_max, field.label(), opt);
}

/// Real trigonometric series a0 + sum_n a_n cos(n t) + b_n sin(n t).
struct FourierSeries {
  double a0 = 0.0;
  std::vector<double> a;  ///< a[n-1] multiplies cos(n t)
  std::vector<double> b;  ///< b[n-1] multiplies sin(n t)

  static FourierSeries cosine(int n, double amplitude = 1.0) {
    FourierSeries f;
    if (n == 0) {
      f.a0 = amplitude;
      return f;
    }
    f.a.assign(static_cast<std::size_t>(n), 0.0);
    f.b.assign(static_cast<std::size_t>(n), 0.0);
    f.a[static_cast<std::size_t>(n) - 1] = amplitude;
    return f;
  }
  static FourierSeries sine(int n, double amplitude = 1.0) {
    FourierSeries f;
    f.a.assign(static_cast<std::size_t>(n), 0.0);
    f.b.assign(static_cast<std::size_t>(n), 0.0);
    f.b[static_cast<std::size_t>(n) - 1] = amplitude;
    return f;
  }

  int degree() const { return static_cast<int>(std::max(a.size(), b.size())); }
  double cos_coeff(int n) const { return n >= 1 && n <= static_cast<int>(a.size()) ? a[n - 1] : 0.0; }
  double sin_coeff(int n) const { return n >= 1 && n <= static_cast<int>(b.size()) ? b[n - 1] : 0.0; }

  double operator()(double t) const {
    double v = a0;
    for (int n = 1; n <= degree(); ++n) v += cos_coeff(n) * std::cos(n * t) + sin_coeff(n) * std::sin(n * t);
    return v;
  }
  double derivative(double t) const {
    double v = 0.0;
    for (int n = 1; n <= degree(); ++n) v += n * (sin_coeff(n) * std::cos(n * t) - cos_coeff(n) * std::sin(n * t));
    return v;
  }
};

struct DtNApplyResult {
  FourierSeries value;
  bool truncated = false;
  std::string warning;
};

/// Mode-wise multiplication by lambda_n. Modes beyond n_max are dropped with a warning.
inline DtNApplyResult dtn_apply(const DtNOperator& op, const FourierSeries& phi) {
  DtNApplyResult out;
  const int deg = std::min(phi.degree(), op.n_max);
  out.value.a.assign(static_cast<std::size_t>(deg), 0.0);
  out.value.b.assign(static_cast<std::size_t>(deg), 0.0);
  for (int n = 1; n <= deg; ++n) {
    out.value.a[n - 1] = op.lambda(n) * phi.cos_coeff(n);
    out.value.b[n - 1] = op.lambda(n) * phi.sin_coeff(n);
  }
  for (int n = op.n_max + 1; n <= phi.degree(); ++n) {
    if (phi.cos_coeff(n) != 0.0 || phi.sin_coeff(n) != 0.0) {
      out.truncated = true;
      out.warning = "input has Fourier modes above n_max = " + std::to_string(op.n_max) + "; they were dropped";
      break;
    }
  }
  return out;
}

/// Abel-regularized jump kernel N(delta) = -(1/pi) sum_{n>=1} lambda_n cos(n delta) r^n.
/// The tail lambda_n ~ alpha n + beta is summed in closed form, using the
/// slope and offset of the last two computed eigenvalues.
inline double levy_kernel(const DtNOperator& op, double delta, double abel_r = 1.0 - 1e-4) {
  delta = std::abs(wrap_difference(delta));
  if (delta == 0.0) throw SingularityError("levy_kernel diverges on the diagonal (delta = 0)");
  if (!(abel_r > 0.0 && abel_r <= 1.0)) throw PreconditionError("abel_r must lie in (0, 1]");
  if (op.n_max < 2) throw PreconditionError("levy_kernel needs at least two eigenvalues");
  const int N = op.n_max;
  const double alpha = op.lambda(N) - op.lambda(N - 1);
  const double beta = op.lambda(N) - alpha * N;
  const std::complex<double> z = abel_r * std::polar(1.0, delta);
  // sum n z^n = z / (1 - z)^2 and sum z^n = z / (1 - z), n >= 1.
  double series = alpha * std::real(z / ((1.0 - z) * (1.0 - z))) + beta * std::real(z / (1.0 - z));
  double rn = 1.0;
  for (int n = 1; n <= N; ++n) {
    rn *= abel_r;
    const double rest = op.lambda(n) - (alpha * n + beta);
    if (rest != 0.0) series += rest * std::cos(n * delta) * rn;
  }
  return -series / kPi;
}

/// Closed form for Brownian reflection on the unit disk with kappa = 1/2:
/// N(delta) = (4 pi (1 - cos delta))^-1.
inline double feller_kernel(double delta) {
  const double s = std::sin(0.5 * delta);
  if (s == 0.0) throw SingularityError("Feller kernel diverges on the diagonal");
  // 1 - cos = 2 sin^2(delta/2), written this way to avoid cancellation.
  return 1.0 / (8.0 * kPi * s * s);
}

}  // namespace bdlab
