#pragma once

// Estimators driven by interior starts: exit law, Feynman-Kac representations
// of the Dirichlet and co-normal problems, and the Revuz identity for the
// boundary local time.

#include "bdlab/estimators/common.hpp"
#include "bdlab/reference/kernels.hpp"
#include "bdlab/simulate.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

namespace bdlab {

// ---------------------------------------------------------------- hitting law

struct HittingLaw {
  std::vector<double> bin_lo, bin_hi;  ///< bins centred on k * period / n_bins
  std::vector<std::uint64_t> counts;
  std::vector<double> frequency, std_error;
  std::vector<double> reference;  ///< closed-form arc probabilities, when available
  std::size_t n_paths = 0;
  double sup_relative_error = std::numeric_limits<double>::quiet_NaN();
  double dt = 0.0;
  std::uint64_t seed = 0;
};

inline HittingLaw estimate_hitting_law(const Vec2& x0, const ConductivityField& field, const Domain& domain,
                                       std::size_t n_paths, int n_bins, const SimParams& params,
                                       const RunSettings& run) {
  if (!domain.contains(x0)) throw PreconditionError("hitting law needs an interior start");
  if (n_bins < 1) throw PreconditionError("n_bins must be positive");
  const double w = domain.period() / n_bins;
  using Counts = std::vector<std::uint64_t>;
  auto counts = parallel_reduce<Counts>(
      n_paths, run.parallel(), [&] { return Counts(static_cast<std::size_t>(n_bins), 0); },
      [&](std::size_t i, Counts& acc) {
        RngStream rng(run.seed, run.stream_offset + i);
        const auto r = sample_absorbed(x0, field, domain, rng, params);
        const double u = std::fmod(r.exit_point.theta + 0.5 * w, domain.period());
        acc[static_cast<std::size_t>(std::min(n_bins - 1, static_cast<int>(u / w)))] += 1;
      },
      [](Counts& a, Counts&& b) {
        for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
      });

  HittingLaw out;
  out.n_paths = n_paths;
  out.counts = counts;
  out.dt = params.dt;
  out.seed = run.seed;
  const bool closed_form = domain.kind() == DomainKind::UnitDisk && field.is_constant();
  if (closed_form) out.sup_relative_error = 0.0;
  for (int k = 0; k < n_bins; ++k) {
    const double p = static_cast<double>(counts[k]) / static_cast<double>(n_paths);
    out.bin_lo.push_back(k * w - 0.5 * w);
    out.bin_hi.push_back(k * w + 0.5 * w);
    out.frequency.push_back(p);
    out.std_error.push_back(std::sqrt(p * (1 - p) / static_cast<double>(n_paths)));
    if (closed_form) {
      // Constant kappa only changes the clock, so the exit law is the kappa = 1 Poisson kernel.
      const double ref = poisson_arc_probability(x0, out.bin_lo.back(), out.bin_hi.back());
      out.reference.push_back(ref);
      out.sup_relative_error = std::max(out.sup_relative_error, std::abs(p - ref) / ref);
    }
  }
  return out;
}

// ------------------------------------------------------- Dirichlet problem

/// u(x0) = E phi(X at exit), the Dirichlet solution.
inline MCEstimate feynman_kac_dirichlet(const Vec2& x0, const BoundaryFunction& phi, const ConductivityField& field,
                                        const Domain& domain, std::size_t n_paths, const SimParams& params,
                                        const RunSettings& run) {
  auto stats = parallel_reduce<RunningStats>(
      n_paths, run.parallel(), [] { return RunningStats{}; },
      [&](std::size_t i, RunningStats& acc) {
        RngStream rng(run.seed, run.stream_offset + i);
        acc.add(phi(sample_absorbed(x0, field, domain, rng, params).exit_point.theta));
      },
      [](RunningStats& a, RunningStats&& b) { a.merge(b); });
  return MCEstimate::from(stats, params.dt, run.seed);
}

// -------------------------------------------------------- co-normal problem

struct NeumannEstimate {
  MCEstimate at_T;          ///< control-variate estimate at the horizon
  MCEstimate at_half_T;     ///< same estimator at T / 2
  MCEstimate raw_at_T;      ///< plain mean of int_0^T f dL
  MCEstimate raw_at_half_T;
  double horizon = 0.0;
  std::vector<double> beta;  ///< fitted control-variate coefficients at T
};

namespace detail {

/// Regression control variates: y - beta . (c - E c) with E c = 0.
/// Streams the moments needed for the least-squares beta.
struct ControlVariateMoments {
  static constexpr int K = 2;
  std::size_t n = 0;
  double sy = 0.0, syy = 0.0;
  Eigen::Vector2d sc = Eigen::Vector2d::Zero(), syc = Eigen::Vector2d::Zero();
  Eigen::Matrix2d scc = Eigen::Matrix2d::Zero();

  void add(double y, const Eigen::Vector2d& c) {
    ++n;
    sy += y;
    syy += y * y;
    sc += c;
    syc += y * c;
    scc += c * c.transpose();
  }
  void merge(const ControlVariateMoments& o) {
    n += o.n;
    sy += o.sy;
    syy += o.syy;
    sc += o.sc;
    syc += o.syc;
    scc += o.scc;
  }

  MCEstimate raw(double dt, std::uint64_t seed) const {
    const double nn = static_cast<double>(n), m = sy / nn;
    const double var = n > 1 ? (syy - nn * m * m) / (nn - 1) : 0.0;
    return {m, std::sqrt(std::max(0.0, var) / nn), n, dt, seed};
  }

  /// Mean and stderr of the residual y - beta . c; controls have zero mean exactly.
  MCEstimate adjusted(double dt, std::uint64_t seed, Eigen::Vector2d* beta_out = nullptr) const {
    const double nn = static_cast<double>(n);
    const double my = sy / nn;
    const Eigen::Vector2d mc = sc / nn;
    const Eigen::Matrix2d cov = (scc - nn * mc * mc.transpose()) / (nn - 1);
    const Eigen::Vector2d cyc = (syc - nn * my * mc) / (nn - 1);
    Eigen::Vector2d beta = Eigen::Vector2d::Zero();
    if (n > 10 && std::abs(cov.determinant()) > 1e-300) beta = cov.ldlt().solve(cyc);
    if (beta_out) *beta_out = beta;
    const double var_y = (syy - nn * my * my) / (nn - 1);
    const double var = var_y - 2.0 * beta.dot(cyc) + beta.dot(cov * beta);
    return {my - beta.dot(mc), std::sqrt(std::max(0.0, var) / nn), n, dt, seed};
  }
};

struct NeumannAcc {
  ControlVariateMoments half, full;
  void merge(const NeumannAcc& o) {
    half.merge(o.half);
    full.merge(o.full);
  }
};

}  // namespace detail

/// Mean-zero solution of the co-normal problem, u(x0) = lim E int_0^T f(X) dL.
/// The coordinate martingales int grad x_j . B dW (mean zero) serve as control
/// variates; the plain estimator is returned alongside.
inline NeumannEstimate feynman_kac_neumann(const Vec2& x0, const BoundaryFunction& f, const ConductivityField& field,
                                           const Domain& domain, double horizon, std::size_t n_paths,
                                           const SimParams& params, const RunSettings& run) {
  require_compatible_flux(domain, f);
  if (!(horizon > 0.0)) throw PreconditionError("horizon must be positive");
  if (!domain.in_closure(x0, 1e-12)) throw DomainError("start point outside the closed domain");
  ReflectedStepper stepper(field, domain, params);
  auto acc = parallel_reduce<detail::NeumannAcc>(
      n_paths, run.parallel(), [] { return detail::NeumannAcc{}; },
      [&](std::size_t i, detail::NeumannAcc& a) {
        RngStream rng(run.seed, run.stream_offset + i);
        Vec2 x = x0, mart = Vec2::Zero();
        double t = 0.0, y = 0.0;
        bool half_done = false;
        while (t < horizon) {
          const StepRecord r = stepper.step(x, params.dt, rng);
          t += r.dt;
          if (r.contact) y += f(r.foot.theta) * r.dL;
          mart += r.noise;
          x = r.x;
          if (!half_done && t >= 0.5 * horizon) {
            a.half.add(y, mart);
            half_done = true;
          }
        }
        a.full.add(y, mart);
      },
      [](detail::NeumannAcc& a, detail::NeumannAcc&& b) { a.merge(b); });

  NeumannEstimate out;
  out.horizon = horizon;
  Eigen::Vector2d beta;
  out.at_T = acc.full.adjusted(params.dt, run.seed, &beta);
  out.beta = {beta[0], beta[1]};
  out.at_half_T = acc.half.adjusted(params.dt, run.seed);
  out.raw_at_T = acc.full.raw(params.dt, run.seed);
  out.raw_at_half_T = acc.half.raw(params.dt, run.seed);
  return out;
}

// ------------------------------------------------------------------- Revuz

struct RevuzResult {
  MCEstimate lhs;  ///< |D| / t * E int_0^t phi(X) dL under a uniform start
  double rhs = 0.0;  ///< int phi dsigma
  double t = 0.0;
};

inline RevuzResult revuz_check(const ConductivityField& field, const Domain& domain, const BoundaryFunction& phi,
                               double t, std::size_t n_paths, const SimParams& params, const RunSettings& run) {
  if (t < 10.0 * params.dt) throw PreconditionError("revuz_check: t below 10 dt cannot resolve the local time");
  ReflectedStepper stepper(field, domain, params);
  auto stats = parallel_reduce<RunningStats>(
      n_paths, run.parallel(), [] { return RunningStats{}; },
      [&](std::size_t i, RunningStats& acc) {
        RngStream rng(run.seed, run.stream_offset + i);
        Vec2 x = domain.sample_interior(rng);
        double clock = 0.0, sum = 0.0;
        while (clock < t) {
          const StepRecord r = stepper.step(x, std::min(params.dt, t - clock), rng);
          clock += r.dt;
          if (r.contact) sum += phi(r.foot.theta) * r.dL;
          x = r.x;
        }
        acc.add(sum);
      },
      [](RunningStats& a, RunningStats&& b) { a.merge(b); });
  RevuzResult out;
  out.t = t;
  out.lhs = MCEstimate::from(stats, params.dt, run.seed, domain.area() / t);
  out.rhs = boundary_integral(domain, phi);
  return out;
}

}  // namespace bdlab
