#pragma once

// Closed-form and quadrature reference kernels on the unit disk.

#include "bdlab/core.hpp"
#include "bdlab/geometry.hpp"
#include "bdlab/reference/dtn.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>

namespace bdlab {

/// Harmonic-measure density (1 - |x|^2) / (2 pi |x - e_theta|^2) for kappa = 1.
inline double poisson_kernel_disk(const Vec2& x, double theta) {
  const double r2 = x.squaredNorm();
  if (!(r2 < 1.0)) throw DomainError("poisson_kernel_disk needs |x| < 1");
  const Vec2 e(std::cos(theta), std::sin(theta));
  return (1.0 - r2) / (kTwoPi * (x - e).squaredNorm());
}

/// Exit probability through the arc [a, b] by adaptive Gauss-Kronrod quadrature.
inline double poisson_arc_probability(const Vec2& x, double a, double b) {
  auto f = [&x](double t) { return poisson_kernel_disk(x, t); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 25, 1e-13);
}

/// Jump kernel of a rotation-invariant boundary process as a function of the separation.
struct LevyKernelModel {
  std::function<double(double)> N;

  static LevyKernelModel from_dtn(const DtNOperator& op, double abel_r) {
    return {[op, abel_r](double d) { return levy_kernel(op, d, abel_r); }};
  }
  static LevyKernelModel feller(double kappa_value = 0.5) {
    // Kernels scale linearly with a constant conductivity.
    return {[kappa_value](double d) { return 2.0 * kappa_value * feller_kernel(d); }};
  }

  double operator()(double delta) const { return N(delta); }
};

/// int_A int_B N(theta_b - theta_a) dtheta_a dtheta_b for disjoint arcs on the circle.
inline double levy_double_integral(const LevyKernelModel& kernel, const Arc& A, const Arc& B) {
  if (arcs_overlap(Domain::unit_disk(), A, B)) throw PreconditionError("levy_double_integral needs disjoint arcs");
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  auto inner = [&](double ta) {
    auto g = [&](double tb) { return kernel(tb - ta); };
    return GK::integrate(g, B.lo, B.hi, 15, 1e-12);
  };
  return GK::integrate(inner, A.lo, A.hi, 15, 1e-12);
}

/// Mean of the kernel over separations in [lo, hi], the quantity a histogram bin estimates.
inline double levy_bin_average(const LevyKernelModel& kernel, double lo, double hi) {
  auto g = [&](double d) { return kernel(d); };
  return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(g, lo, hi, 15, 1e-12) / (hi - lo);
}

}  // namespace bdlab
