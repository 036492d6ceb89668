#include "bdlab/conductivity.hpp"
#include "bdlab/geometry.hpp"

#include <gtest/gtest.h>

using namespace bdlab;

TEST(Conductivity, ConstantHalf) {
  const auto k = ConductivityField::constant(0.5);
  const Mat2 m = k.eval(Vec2(0.3, -0.2));
  EXPECT_EQ(m(0, 0), 0.5);
  EXPECT_EQ(m(1, 1), 0.5);
  EXPECT_EQ(m(0, 1), 0.0);
  EXPECT_EQ(k.grad_div(Vec2(0.1, 0.2)), Vec2::Zero());
  EXPECT_DOUBLE_EQ(k.ellipticity_c(), 2.0);
}

TEST(Conductivity, RadialOnePlusRSquaredAtUnitRadius) {
  const auto k = ConductivityField::radial({1.0, 0.0, 1.0});
  const Mat2 m = k.eval(Vec2(0.6, 0.8));
  EXPECT_NEAR(m(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(m(1, 1), 2.0, 1e-15);
  EXPECT_EQ(m(0, 1), 0.0);
}

TEST(Conductivity, BumpIsIdentityAtBoundary) {
  const auto k = ConductivityField::bump(Vec2(0.1, 0.0), 0.4, 2.0);
  const Mat2 m = k.eval(Vec2(0.0, 1.0));
  EXPECT_EQ(m, Mat2::Identity());
  EXPECT_GT(k.a1_width(), 0.0);
  EXPECT_GT(k.scalar(Vec2(0.1, 0.0)), 1.0);
}

TEST(Conductivity, EvalOutsideClosureIsDomainError) {
  const auto disk = Domain::unit_disk();
  EXPECT_THROW(eval_kappa(ConductivityField::constant(1.0), disk, Vec2(1.5, 0.0)), DomainError);
  EXPECT_NO_THROW(eval_kappa(ConductivityField::constant(1.0), disk, Vec2(1.0, 0.0)));
}

TEST(Conductivity, ScaleFieldConstant) {
  const auto k = scale_field(ConductivityField::constant(1.0), 2.0);
  EXPECT_DOUBLE_EQ(k.scalar(Vec2(0.2, 0.1)), 0.25);
  EXPECT_DOUBLE_EQ(scale_field(ConductivityField::constant(1.0), 1.0).scalar(Vec2(0.2, 0.1)), 1.0);
  EXPECT_THROW(scale_field(ConductivityField::constant(1.0), 0.0), PreconditionError);
}

TEST(Conductivity, ScaleFieldRadialMatchesSubstitution) {
  const auto base = ConductivityField::radial({1.0, 0.0, 1.0});
  const auto k = scale_field(base, 2.0);
  for (double x = -0.9; x <= 0.9; x += 0.3) {
    for (double y = -0.4; y <= 0.4; y += 0.2) {
      const double r2 = x * x + y * y;
      EXPECT_NEAR(k.scalar(Vec2(x, y)), (1.0 + 4.0 * r2) / 4.0, 1e-15);
      // grad_div of (1 + 4 r^2) / 4 is 2 x.
      EXPECT_NEAR(k.grad_div(Vec2(x, y)).x(), 2.0 * x, 1e-14);
    }
  }
}

TEST(Conductivity, ScaleRoundTrip) {
  const auto base = ConductivityField::bump(Vec2(0.2, -0.1), 0.5, 1.5);
  const auto back = scale_field(scale_field(base, 3.0), 1.0 / 3.0);
  for (double x = -0.6; x <= 0.6; x += 0.05) {
    EXPECT_NEAR((back.eval(Vec2(x, 0.3 * x)) - base.eval(Vec2(x, 0.3 * x))).norm(), 0.0, 1e-14);
  }
}

TEST(Conductivity, GradDivAnalyticMatchesFiniteDifference) {
  const auto check = [](const ConductivityField& k) {
    for (double x = -0.7; x <= 0.7; x += 0.1) {
      const Vec2 p(x, 0.5 * x + 0.1);
      constexpr double h = 1e-6;
      const Vec2 fd((k.scalar(p + Vec2(h, 0)) - k.scalar(p - Vec2(h, 0))) / (2 * h),
                    (k.scalar(p + Vec2(0, h)) - k.scalar(p - Vec2(0, h))) / (2 * h));
      EXPECT_NEAR((k.grad_div(p) - fd).norm(), 0.0, 1e-7) << k.label();
    }
  };
  check(ConductivityField::radial({1.0, 0.0, 1.0}, 0.2));
  check(ConductivityField::bump(Vec2(0.1, 0.1), 0.6, 2.0));
  check(ConductivityField::radial({2.0, 0.5, 1.0}).scaled(1.3).multiplied(0.7));
}

TEST(Conductivity, CustomAnisotropicGradDiv) {
  // kappa = [[1 + x^2, x y], [x y, 1 + y^2]]: div rows = (3x, 3y).
  const auto k = ConductivityField::custom(
      [](const Vec2& p) {
        Mat2 m;
        m << 1 + p.x() * p.x(), p.x() * p.y(), p.x() * p.y(), 1 + p.y() * p.y();
        return m;
      },
      3.0, false, "aniso");
  const Vec2 g = k.grad_div(Vec2(0.3, -0.4));
  EXPECT_NEAR(g.x(), 0.9, 1e-8);
  EXPECT_NEAR(g.y(), -1.2, 1e-8);
}

TEST(Conductivity, CollarIsIdentityNearBoundary) {
  const auto k = ConductivityField::radial({1.0, 0.0, 1.0}, 0.15);
  const auto rep = check_field(k, Domain::unit_disk());
  EXPECT_TRUE(rep.ok);
  EXPECT_EQ(rep.max_a1_violation, 0.0);
  EXPECT_EQ(k.scalar(Vec2(0.9, 0.0)), 1.0);
  EXPECT_NEAR(k.scalar(Vec2(0.5, 0.0)), 1.25, 1e-15);
}

TEST(Conductivity, SampledEllipticityAndSymmetry) {
  for (const auto& k : {ConductivityField::constant(0.5), ConductivityField::radial({1.0, 0.0, 1.0}),
                        ConductivityField::bump(Vec2(0.0, 0.0), 0.5, 3.0)}) {
    const auto rep = check_field(k, Domain::unit_disk());
    EXPECT_TRUE(rep.ok) << k.label();
    EXPECT_LE(rep.max_asymmetry, 1e-14);
    EXPECT_GE(rep.min_eigenvalue, 1.0 / k.ellipticity_c() - 1e-14);
    EXPECT_LE(rep.max_eigenvalue, k.ellipticity_c() + 1e-14);
  }
}

TEST(Conductivity, NonEllipticProfileRejected) {
  EXPECT_THROW(ConductivityField::radial({1.0, 0.0, -1.0}), PreconditionError);
  EXPECT_THROW(ConductivityField::constant(0.0), PreconditionError);
}
