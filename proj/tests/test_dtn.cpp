#include "bdlab/reference/dtn.hpp"

#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

#include <array>

using namespace bdlab;

namespace {

// Oracle: adaptive Dormand-Prince on the second-order mode equation in r,
// u'' = n^2 u / r^2 - (1/r + k'/k) u', started from the series u = r^n (1 + c r^2).
double lambda_by_dopri(int n, double (*k)(double), double (*dk)(double), double c) {
  using State = std::array<double, 2>;
  const double r0 = 1e-2;
  State s{std::pow(r0, n) * (1 + c * r0 * r0), n * std::pow(r0, n - 1) + c * (n + 2) * std::pow(r0, n + 1)};
  auto rhs = [&](const State& y, State& dy, double r) {
    dy[0] = y[1];
    dy[1] = n * n * y[0] / (r * r) - (1.0 / r + dk(r) / k(r)) * y[1];
  };
  namespace ode = boost::numeric::odeint;
  ode::integrate_adaptive(ode::make_controlled(1e-14, 1e-14, ode::runge_kutta_dopri5<State>()), rhs, s, r0, 1.0, 1e-4);
  return k(1.0) * s[1] / s[0];
}

double quad_k(double r) { return 1.0 + r * r; }
double quad_dk(double r) { return 2.0 * r; }

}  // namespace

TEST(DtN, ConstantOneGivesIdentitySpectrum) {
  const auto op = dtn_eigenvalues_radial(ConductivityField::constant(1.0), 12);
  for (int n = 0; n <= 12; ++n) EXPECT_NEAR(op.lambda(n), n, 1e-8);
}

TEST(DtN, RadialSolverRecoversConstantProfiles) {
  // The ODE path, not the constant shortcut.
  auto one = [](double) { return 1.0; };
  auto half = [](double) { return 0.5; };
  auto zero = [](double) { return 0.0; };
  const auto a = dtn_eigenvalues_radial(one, zero, 10);
  const auto b = dtn_eigenvalues_radial(half, zero, 10);
  for (int n = 0; n <= 10; ++n) {
    EXPECT_NEAR(a.lambda(n), n, 1e-8);
    EXPECT_NEAR(b.lambda(n), 0.5 * n, 1e-8);
  }
}

TEST(DtN, ConstantScalingLaw) {
  const auto field = ConductivityField::radial({1.0, 0.0, 1.0});
  const auto base = dtn_eigenvalues_radial(field, 8);
  for (double c : {0.5, 3.0}) {
    const auto scaled = dtn_eigenvalues_radial(field.multiplied(c), 8);
    for (int n = 1; n <= 8; ++n) EXPECT_NEAR(scaled.lambda(n), c * base.lambda(n), 1e-10 * c * base.lambda(n));
  }
}

TEST(DtN, QuadraticProfileMatchesIndependentIntegrator) {
  const auto op = dtn_eigenvalues_radial(ConductivityField::radial({1.0, 0.0, 1.0}), 8);
  for (int n = 1; n <= 8; ++n) {
    const double oracle = lambda_by_dopri(n, quad_k, quad_dk, -n / (2.0 * (n + 1)));
    EXPECT_NEAR(op.lambda(n), oracle, 1e-8) << "mode " << n;
  }
  // Monotone and above the kappa = 1 spectrum times kappa(0), below kappa(1) n.
  for (int n = 1; n <= 8; ++n) {
    EXPECT_GT(op.lambda(n), op.lambda(n - 1));
    EXPECT_GT(op.lambda(n), n);
    EXPECT_LT(op.lambda(n), 2.0 * n);
  }
}

TEST(DtN, NonEllipticProfileRejected) {
  auto bad = [](double r) { return 1.0 - 2.0 * r; };
  auto dbad = [](double) { return -2.0; };
  EXPECT_THROW(dtn_eigenvalues_radial(bad, dbad, 4), PreconditionError);
  EXPECT_THROW(dtn_eigenvalues_radial(ConductivityField::bump(Vec2(0.2, 0.0), 0.3, 1.0), 4), PreconditionError);
}

TEST(DtN, ApplyExamples) {
  const auto one = dtn_constant(1.0, 8), half = dtn_constant(0.5, 8);
  const auto c = dtn_apply(one, FourierSeries::cosine(0, 1.0));
  EXPECT_EQ(c.value(0.3), 0.0);
  const auto d = dtn_apply(one, FourierSeries::cosine(1));
  for (double t : {0.0, 1.0, 2.5}) EXPECT_NEAR(d.value(t), std::cos(t), 1e-15);
  const auto e = dtn_apply(half, FourierSeries::cosine(3));
  for (double t : {0.0, 1.0, 2.5}) EXPECT_NEAR(e.value(t), 1.5 * std::cos(3 * t), 1e-15);
  EXPECT_FALSE(e.truncated);
  // Zero mean regardless of the input constant.
  auto f = FourierSeries::sine(2, 0.7);
  f.a0 = 4.0;
  EXPECT_EQ(dtn_apply(one, f).value.a0, 0.0);
}

TEST(DtN, ApplyWarnsOnTruncation) {
  const auto r = dtn_apply(dtn_constant(1.0, 2), FourierSeries::cosine(5));
  EXPECT_TRUE(r.truncated);
  EXPECT_FALSE(r.warning.empty());
  EXPECT_EQ(r.value(0.4), 0.0);
}

TEST(LevyKernel, PublishedValues) {
  const auto half = dtn_constant(0.5, 16), one = dtn_constant(1.0, 16);
  EXPECT_NEAR(levy_kernel(half, kPi, 1 - 1e-6), 1.0 / (8 * kPi), 1e-6);
  EXPECT_NEAR(levy_kernel(one, kPi, 1 - 1e-6), 1.0 / (4 * kPi), 1e-6);
  EXPECT_NEAR(levy_kernel(half, kPi / 2, 1 - 1e-6), 1.0 / (4 * kPi), 1e-6);
}

TEST(LevyKernel, ConvergesToFellerKernel) {
  const auto half = dtn_constant(0.5, 16);
  for (double d = 0.1; d <= kPi; d += 0.05) {
    const double ref = 1.0 / (4 * kPi * (1 - std::cos(d)));
    EXPECT_NEAR(levy_kernel(half, d, 1 - 1e-6) / ref, 1.0, 1e-6) << d;
    EXPECT_NEAR(feller_kernel(d) / ref, 1.0, 1e-13);
  }
}

TEST(LevyKernel, SymmetricAndNonnegativeForRadialField) {
  const auto op = dtn_eigenvalues_radial(ConductivityField::radial({1.0, 0.0, 1.0}, 0.1), 24);
  for (double d = 0.05; d <= kPi; d += 0.1) {
    EXPECT_GT(levy_kernel(op, d), 0.0);
    EXPECT_NEAR(levy_kernel(op, d), levy_kernel(op, -d), 1e-13);
  }
}

TEST(LevyKernel, DiagonalIsSingular) {
  EXPECT_THROW(levy_kernel(dtn_constant(1.0, 8), 0.0), SingularityError);
  EXPECT_THROW(levy_kernel(dtn_constant(1.0, 8), kTwoPi), SingularityError);
  EXPECT_THROW(feller_kernel(0.0), SingularityError);
}
