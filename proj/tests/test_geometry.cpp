#include "bdlab/geometry.hpp"
#include "bdlab/rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

using namespace bdlab;

TEST(Geometry, DiskProjectionOutside) {
  const auto disk = Domain::unit_disk();
  const auto p = disk.project_to_boundary(Vec2(1.1, 0.0));
  EXPECT_DOUBLE_EQ(p.foot.theta, 0.0);
  EXPECT_DOUBLE_EQ(p.normal.x(), 1.0);
  EXPECT_NEAR(p.depth, 0.1, 1e-15);
  EXPECT_FALSE(p.inside);
}

TEST(Geometry, DiskProjectionInsideHasZeroDepth) {
  const auto p = Domain::unit_disk().project_to_boundary(Vec2(0.9, 0.0));
  EXPECT_TRUE(p.inside);
  EXPECT_EQ(p.depth, 0.0);
  EXPECT_DOUBLE_EQ(p.foot.theta, 0.0);
  EXPECT_DOUBLE_EQ(p.normal.x(), 1.0);
}

TEST(Geometry, SquareProjectionAxisFace) {
  const auto p = Domain::unit_square().project_to_boundary(Vec2(0.5, 1.07));
  EXPECT_DOUBLE_EQ(p.foot.cartesian.x(), 0.5);
  EXPECT_DOUBLE_EQ(p.foot.cartesian.y(), 1.0);
  EXPECT_DOUBLE_EQ(p.normal.y(), 1.0);
  EXPECT_NEAR(p.depth, 0.07, 1e-14);
}

TEST(Geometry, SquareCornerUsesBisector) {
  const auto p = Domain::unit_square().project_unchecked(Vec2(1.1, 1.1));
  EXPECT_DOUBLE_EQ(p.foot.cartesian.x(), 1.0);
  EXPECT_DOUBLE_EQ(p.foot.cartesian.y(), 1.0);
  EXPECT_NEAR(p.normal.x(), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(p.normal.y(), std::sqrt(0.5), 1e-15);
  EXPECT_EQ(Domain::unit_square().normal(2.0), p.normal);
}

TEST(Geometry, ProjectionBeyondReachRejected) {
  EXPECT_THROW(Domain::unit_disk().project_to_boundary(Vec2(2.0, 0.0)), ProjectionReachError);
  EXPECT_THROW(Domain::unit_square().project_to_boundary(Vec2(0.5, -0.8)), ProjectionReachError);
}

TEST(Geometry, ProjectionIdempotent) {
  auto rng = seed_rng(3, 0);
  for (const auto& dom : {Domain::unit_disk(), Domain::unit_square(), Domain::star({1.0, 0.1, 0.0, 0.05})}) {
    for (int i = 0; i < 200; ++i) {
      const auto b = dom.sample_boundary(rng);
      const Vec2 x = b.cartesian + (0.4 * rng.uniform() - 0.2) * dom.normal(b.theta);
      const auto p = dom.project_unchecked(x);
      const auto q = dom.project_unchecked(p.foot.cartesian);
      EXPECT_LT((q.foot.cartesian - p.foot.cartesian).norm(), 1e-10);
      EXPECT_LT(q.depth, 1e-10);
    }
  }
}

TEST(Geometry, BoundaryParam) {
  const auto disk = Domain::unit_disk();
  EXPECT_NEAR(disk.boundary_param(kPi / 2).cartesian.x(), 0.0, 1e-16);
  EXPECT_DOUBLE_EQ(disk.boundary_param(kPi / 2).cartesian.y(), 1.0);
  EXPECT_DOUBLE_EQ(disk.boundary_param(0.0).cartesian.x(), 1.0);
  EXPECT_NEAR(disk.boundary_param(5 * kTwoPi + 0.25).theta, 0.25, 1e-12);
  const auto sq = Domain::unit_square().boundary_param(1.5);
  EXPECT_DOUBLE_EQ(sq.cartesian.x(), 1.0);
  EXPECT_DOUBLE_EQ(sq.cartesian.y(), 0.5);
  EXPECT_DOUBLE_EQ(Domain::unit_square().boundary_param(-0.5).cartesian.y(), 0.5);
}

TEST(Geometry, DiskNormalIsExact) {
  const auto disk = Domain::unit_disk();
  for (double t = 0.0; t < kTwoPi; t += 0.1) {
    EXPECT_EQ(disk.normal(t), Vec2(std::cos(t), std::sin(t)));
  }
}

TEST(Geometry, SurfaceMeasure) {
  const auto disk = Domain::unit_disk();
  EXPECT_NEAR(disk.surface_measure(0.0, kTwoPi), kTwoPi, 1e-15);
  EXPECT_NEAR(disk.surface_measure(0.0, kPi / 2), kPi / 2, 1e-15);
  EXPECT_THROW(disk.surface_measure(1.0, 0.5), PreconditionError);
  EXPECT_DOUBLE_EQ(Domain::unit_square().boundary_length(), 4.0);
}

TEST(Geometry, StarBoundaryLengthMatchesQuadratureOracle) {
  const auto star = Domain::star({1.0, 0.1});
  // Oracle: arc length of r = 1 + 0.1 cos t, |c'| = sqrt(rho^2 + rho'^2).
  auto speed = [](double t) {
    const double r = 1.0 + 0.1 * std::cos(t), dr = -0.1 * std::sin(t);
    return std::sqrt(r * r + dr * dr);
  };
  const double oracle =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(speed, 0.0, kTwoPi, 30, 1e-15);
  EXPECT_NEAR(star.boundary_length(), oracle, 1e-10);
  EXPECT_NEAR(star.surface_measure(0.0, kTwoPi), oracle, 1e-10);
  // Additivity and shift invariance.
  const double a = star.surface_measure(0.3, 1.7), b = star.surface_measure(1.7, 4.0);
  EXPECT_NEAR(a + b, star.surface_measure(0.3, 4.0), 1e-12);
  EXPECT_NEAR(star.surface_measure(0.3 + kTwoPi, 1.7 + kTwoPi), a, 1e-12);
  // Area of r = 1 + 0.1 cos t is pi (1 + 0.1^2 / 2).
  EXPECT_NEAR(star.area(), kPi * 1.005, 1e-10);
}

TEST(Geometry, StarNormalsAreUnitAndOnCurve) {
  const auto star = Domain::star({1.0, 0.1, 0.05, 0.03});
  for (double t = 0.0; t < kTwoPi; t += 0.07) {
    EXPECT_NEAR(star.normal(t).norm(), 1.0, 1e-14);
    const auto p = star.boundary_param(t);
    EXPECT_NEAR(p.cartesian.norm(), star.rho(t), 1e-12);
    // The outward normal points away from the origin for a star domain.
    EXPECT_GT(star.normal(t).dot(p.cartesian), 0.0);
  }
}

TEST(Geometry, StarProjectionFindsNearestPoint) {
  const auto star = Domain::star({1.0, 0.1});
  const Vec2 x(0.2, 1.15);
  const auto p = star.project_to_boundary(x);
  double best = 1e9;
  for (int i = 0; i < 200000; ++i) best = std::min(best, (star.boundary_param(kTwoPi * i / 200000.0).cartesian - x).norm());
  EXPECT_NEAR(p.depth, best, 1e-8);
  EXPECT_LT((p.foot.cartesian + p.depth * p.normal - x).norm(), 1e-10);
}

TEST(Geometry, ArcsAndSeparation) {
  const auto disk = Domain::unit_disk();
  EXPECT_TRUE(disk.arc_contains({-kPi / 8, kPi / 8}, 0.0));
  EXPECT_TRUE(disk.arc_contains({-kPi / 8, kPi / 8}, kTwoPi - 0.1));
  EXPECT_FALSE(disk.arc_contains({-kPi / 8, kPi / 8}, kPi));
  EXPECT_NEAR(disk.separation(0.1, kTwoPi - 0.1), 0.2, 1e-14);
  EXPECT_NEAR(disk.separation(0.0, kPi), kPi, 1e-15);
}

TEST(Geometry, BoundarySamplingIsUniformInSurfaceMeasure) {
  const auto star = Domain::star({1.0, 0.3});
  auto rng = seed_rng(11, 0);
  const int n = 200000;
  int in_arc = 0;
  for (int i = 0; i < n; ++i) in_arc += star.arc_contains({-0.5, 0.5}, star.sample_boundary(rng).theta);
  const double p = star.surface_measure(-0.5, 0.5) / star.boundary_length();
  EXPECT_NEAR(static_cast<double>(in_arc) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}
