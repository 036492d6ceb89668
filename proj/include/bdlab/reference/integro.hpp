#pragma once

// Integro-differential form of the DtN map on the unit circle:
//   Lambda phi(x) = Lambda id(x) . grad_T phi(x) - A phi(x),
//   A phi(x) = int (phi(y) - phi(x) - grad_T phi(x) . (y - x)) N(x, y) dsigma(y),
// with N >= 0 the jump kernel. The principal-value integral is truncated to
// |y - x| angle >= eps and evaluated with the Abel-regularized kernel.

#include "bdlab/reference/dtn.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace bdlab {

struct IntegroCheck {
  std::vector<double> theta;
  std::vector<double> lhs;         ///< Lambda phi from dtn_apply
  std::vector<double> drift_term;  ///< Lambda id . grad_T phi
  std::vector<double> jump_term;   ///< -A phi, truncated at eps
  double residual_sup = 0.0;       ///< sup |lhs - drift_term - jump_term|
  std::string warning;
};

inline IntegroCheck integro_decomposition_check(const DtNOperator& op, const FourierSeries& phi, double eps,
                                                double abel_r = 1.0 - 1e-6, int n_theta = 64) {
  if (!(eps > 0.0 && eps < kPi)) throw PreconditionError("eps must lie in (0, pi)");
  IntegroCheck out;
  const int deg = phi.degree();
  if (deg >= 4) {
    double head = 0.0, tail = 0.0;
    for (int n = 1; n <= deg; ++n) {
      const double c = std::hypot(phi.cos_coeff(n), phi.sin_coeff(n));
      double& slot = n <= deg / 2 ? head : tail;
      slot = std::max(slot, c);
    }
    if (tail > 1e-6 * head) out.warning = "slow Fourier decay; the truncated integral may be inaccurate";
  }
  const auto lhs = dtn_apply(op, phi);
  if (lhs.truncated) out.warning += (out.warning.empty() ? "" : "; ") + lhs.warning;
  // Lambda of the coordinate functions cos and sin: lambda_1 times themselves.
  const double lambda1 = op.n_max >= 1 ? op.lambda(1) : 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

  for (int i = 0; i < n_theta; ++i) {
    const double th = kTwoPi * i / n_theta;
    const Vec2 x(std::cos(th), std::sin(th));
    const Vec2 tangent(-std::sin(th), std::cos(th));
    const Vec2 grad_t = phi.derivative(th) * tangent;
    const Vec2 lambda_id = lambda1 * x;
    const double phix = phi(th);
    auto integrand = [&](double d) {
      const double ty = th + d;
      const Vec2 y(std::cos(ty), std::sin(ty));
      return (phi(ty) - phix - grad_t.dot(y - x)) * levy_kernel(op, d, abel_r);
    };
    // Geometric breakpoints keep the adaptive rule away from the steep region near eps.
    double a = 0.0;
    for (double lo = eps; lo < kPi;) {
      const double hi = std::min(kPi, 8.0 * lo);
      a += GK::integrate(integrand, lo, hi, 12, 1e-11) + GK::integrate(integrand, -hi, -lo, 12, 1e-11);
      lo = hi;
    }
    out.theta.push_back(th);
    out.lhs.push_back(lhs.value(th));
    out.drift_term.push_back(lambda_id.dot(grad_t));
    out.jump_term.push_back(-a);
    out.residual_sup = std::max(out.residual_sup, std::abs(out.lhs.back() - out.drift_term.back() - out.jump_term.back()));
  }
  return out;
}

}  // namespace bdlab
