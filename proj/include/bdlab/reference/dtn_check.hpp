#pragma once

// Second, independent DtN integrator: adaptive Dormand-Prince on the mode
// equation in r, u'' = n^2 u / r^2 - (1/r + k'/k) u', started from the
// two-term series u = r^n (1 + c r^2). Used to cross-check the Riccati solver.

#include "bdlab/reference/dtn.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>

namespace bdlab {

inline double dtn_eigenvalue_dopri(const std::function<double(double)>& kappa,
                                   const std::function<double(double)>& dkappa, int n, double tol = 1e-13) {
  if (n < 1) return 0.0;
  using State = std::array<double, 2>;
  const double h = 1e-3, k0 = kappa(0.0);
  const double c = -n * (2.0 * (kappa(h) - k0) / (h * h)) / (4.0 * k0 * (n + 1));
  const double r0 = 1e-2;
  State s{std::pow(r0, n) * (1 + c * r0 * r0), n * std::pow(r0, n - 1) + c * (n + 2) * std::pow(r0, n + 1)};
  auto rhs = [&](const State& y, State& dy, double r) {
    dy[0] = y[1];
    dy[1] = n * n * y[0] / (r * r) - (1.0 / r + dkappa(r) / kappa(r)) * y[1];
  };
  namespace ode = boost::numeric::odeint;
  ode::integrate_adaptive(ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<State>()), rhs, s, r0, 1.0, 1e-4);
  return kappa(1.0) * s[1] / s[0];
}

inline double dtn_eigenvalue_dopri(const ConductivityField& field, int n) {
  if (!field.rotation_invariant() || !field.isotropic())
    throw PreconditionError("dtn_eigenvalue_dopri needs a rotation-invariant isotropic field");
  return dtn_eigenvalue_dopri([&](double r) { return field.scalar(Vec2(r, 0.0)); },
                              [&](double r) { return field.grad_div(Vec2(r, 0.0)).x(); }, n);
}

}  // namespace bdlab
