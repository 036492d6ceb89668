#pragma once

// Shared result types and run settings for the Monte Carlo estimators.

#include "bdlab/core.hpp"
#include "bdlab/geometry.hpp"
#include "bdlab/parallel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

namespace bdlab {

struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;  ///< sample standard deviation / sqrt(n_samples)
  std::size_t n_samples = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;

  static MCEstimate from(const RunningStats& s, double dt, std::uint64_t seed, double scale = 1.0) {
    return {scale * s.mean, std::abs(scale) * s.stderr_of_mean(), s.n, dt, seed};
  }
};

/// Seed, worker count and stream offset shared by every Monte Carlo run.
struct RunSettings {
  std::uint64_t seed = 1;
  int threads = 1;
  std::uint64_t stream_offset = 0;  ///< path i uses stream stream_offset + i
  std::size_t chunk = 64;

  ParallelOptions parallel() const { return {threads, chunk}; }
};

using BoundaryFunction = std::function<double(double)>;  ///< function of the boundary parameter

/// int f dsigma over the whole boundary.
inline double boundary_integral(const Domain& domain, const BoundaryFunction& f) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto g = [&](double t) { return f(t) * domain.boundary_param(t).density; };
  // Square faces are integrated separately so corners fall on breakpoints.
  const int pieces = domain.kind() == DomainKind::UnitSquare ? 4 : 8;
  const double w = domain.period() / pieces;
  double total = 0.0;
  for (int k = 0; k < pieces; ++k) total += GK::integrate(g, k * w, (k + 1) * w, 15, 1e-12);
  return total;
}

/// Current conservation for co-normal data: int f dsigma must vanish.
inline void require_compatible_flux(const Domain& domain, const BoundaryFunction& f, double tol = 1e-12) {
  const double total = boundary_integral(domain, f);
  if (std::abs(total) > tol)
    throw CompatibilityError("boundary flux violates current conservation: int f dsigma = " + std::to_string(total) +
                             " (must vanish)");
}

}  // namespace bdlab
