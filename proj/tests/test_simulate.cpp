#include "bdlab/parallel.hpp"
#include "bdlab/simulate.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace bdlab;

namespace {
const Domain kDisk = Domain::unit_disk();
}

TEST(Simulate, InteriorStepIsPureBrownianIncrement) {
  const auto field = ConductivityField::constant(0.5);
  auto rng = seed_rng(1, 1), replay = seed_rng(1, 1);
  const Vec2 x(0.1, -0.2);
  const double dt = 1e-4;
  const auto rec = step_reflected(x, dt, field, kDisk, rng);
  const double z1 = replay.normal(), z2 = replay.normal();
  EXPECT_NEAR(rec.x.x(), x.x() + std::sqrt(dt) * z1, 1e-16);
  EXPECT_NEAR(rec.x.y(), x.y() + std::sqrt(dt) * z2, 1e-16);
  EXPECT_EQ(rec.dL, 0.0);
  EXPECT_FALSE(rec.contact);
}

TEST(Simulate, FixedCalibrationPushback) {
  SimParams p;
  p.c_cal = 2.0;
  const auto r = reflect_proposal(Vec2(1.1, 0.0), ConductivityField::constant(1.0), kDisk, p);
  EXPECT_TRUE(r.contact);
  EXPECT_DOUBLE_EQ(r.x.x(), 1.0);
  EXPECT_DOUBLE_EQ(r.x.y(), 0.0);
  EXPECT_NEAR(r.dL, 0.2, 1e-15);
}

TEST(Simulate, ConormalCalibrationScalesWithKappa) {
  const SimParams p;  // conormal normalization
  EXPECT_NEAR(reflect_proposal(Vec2(1.1, 0.0), ConductivityField::constant(1.0), kDisk, p).dL, 0.1, 1e-15);
  EXPECT_NEAR(reflect_proposal(Vec2(1.1, 0.0), ConductivityField::constant(0.5), kDisk, p).dL, 0.2, 1e-15);
}

TEST(Simulate, ExactBoundaryLandingIsContactWithoutLocalTime) {
  const auto r = reflect_proposal(Vec2(0.0, 1.0), ConductivityField::constant(1.0), kDisk, SimParams{});
  EXPECT_TRUE(r.contact);
  EXPECT_EQ(r.dL, 0.0);
}

TEST(Simulate, ZeroStepLeavesStateUnchanged) {
  auto rng = seed_rng(2, 0);
  const auto rec = step_reflected(Vec2(0.3, 0.3), 0.0, ConductivityField::constant(1.0), kDisk, rng);
  EXPECT_EQ(rec.x, Vec2(0.3, 0.3));
  EXPECT_EQ(rec.dL, 0.0);
}

TEST(Simulate, ReachViolationAbortsAfterHalvings) {
  SimParams p;
  p.max_halvings = 0;
  auto rng = seed_rng(2, 0);
  EXPECT_THROW(
      {
        for (int i = 0; i < 20; ++i) step_reflected(Vec2(0.0, 0.0), 100.0, ConductivityField::constant(1.0), kDisk, rng, p);
      },
      SimulationError);
  // With halving enabled a huge nominal step is accepted at a reduced size.
  SimParams q;
  q.max_halvings = 30;
  const auto rec = step_reflected(Vec2(0.0, 0.0), 100.0, ConductivityField::constant(1.0), kDisk, rng, q);
  EXPECT_LT(rec.dt, 100.0);
}

TEST(Simulate, ZeroHorizonPath) {
  auto rng = seed_rng(5, 0);
  const auto path = sample_path(Vec2(0.2, 0.1), 0.0, ConductivityField::constant(1.0), kDisk, rng, SimParams{});
  ASSERT_EQ(path.size(), 1u);
  EXPECT_EQ(path.final_local_time(), 0.0);
  EXPECT_THROW(sample_path(Vec2(2.0, 0.0), 1.0, ConductivityField::constant(1.0), kDisk, rng, SimParams{}), DomainError);
}

TEST(Simulate, PathInvariants) {
  for (const auto& dom : {Domain::unit_disk(), Domain::unit_square(), Domain::star({1.0, 0.15, 0.0, 0.05})}) {
    auto rng = seed_rng(6, 0);
    const Vec2 x0 = dom.kind() == DomainKind::UnitSquare ? Vec2(0.5, 0.5) : Vec2(0.0, 0.0);
    SimParams p;
    p.dt = 1e-3;
    const auto path = sample_path(x0, 2.0, ConductivityField::bump(Vec2(0.0, 0.1), 0.4, 1.0), dom, rng, p);
    EXPECT_GE(path.final_time(), 2.0);
    EXPECT_GT(path.final_local_time(), 0.0);
    for (std::size_t i = 1; i < path.size(); ++i) {
      ASSERT_GE(path.local_time[i], path.local_time[i - 1]);
      ASSERT_GT(path.times[i], path.times[i - 1]);
      if (!path.boundary_flags[i]) { ASSERT_EQ(path.local_time[i], path.local_time[i - 1]); }
      ASSERT_TRUE(dom.in_closure(path.points[i], 1e-12)) << to_string(dom.kind());
    }
  }
}

TEST(Simulate, AnisotropicReflectionStaysOnBoundary) {
  const auto field = ConductivityField::custom(
      [](const Vec2& x) {
        Mat2 m;
        m << 1.5, 0.3 * x.x(), 0.3 * x.x(), 1.0;
        return m;
      },
      2.0, false, "aniso");
  auto rng = seed_rng(8, 0);
  SimParams p;
  p.dt = 1e-3;
  const auto path = sample_path(Vec2(0.0, 0.0), 1.0, field, kDisk, rng, p);
  for (std::size_t i = 0; i < path.size(); ++i) {
    ASSERT_LE(path.points[i].norm(), 1.0 + 1e-12);
    if (path.boundary_flags[i]) { ASSERT_NEAR(path.points[i].norm(), 1.0, 1e-12); }
  }
}

TEST(Simulate, Reproducible) {
  const auto field = ConductivityField::radial({1.0, 0.0, 1.0});
  SimParams p;
  p.dt = 1e-3;
  auto a = seed_rng(77, 3), b = seed_rng(77, 3);
  const auto pa = sample_path(Vec2(0.2, 0.0), 1.0, field, kDisk, a, p);
  const auto pb = sample_path(Vec2(0.2, 0.0), 1.0, field, kDisk, b, p);
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ASSERT_EQ(pa.points[i], pb.points[i]);
    ASSERT_EQ(pa.local_time[i], pb.local_time[i]);
  }
}

TEST(Simulate, TerminalRadiusIsAreaUniform) {
  // The reflecting process is symmetric with respect to Lebesgue measure, so
  // the terminal law is uniform on the disk: P(|X| <= r) = r^2. The scheme
  // parks an O(sqrt(dt)) fraction of mass exactly on the circle (about 1.4%
  // at dt = 1e-4), below the KS critical value at this sample size.
  const auto field = ConductivityField::constant(0.5);
  SimParams p;
  p.dt = 1e-4;
  const int n = 2000;
  std::vector<double> r;
  for (int i = 0; i < n; ++i) {
    auto rng = seed_rng(2024, i);
    ReflectedStepper stepper(field, kDisk, p);
    Vec2 x = Vec2::Zero();
    for (double t = 0.0; t < 3.0;) {
      const auto rec = stepper.step(x, p.dt, rng);
      x = rec.x;
      t += rec.dt;
    }
    r.push_back(x.norm());
  }
  std::sort(r.begin(), r.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double F = r[i] * r[i];
    ks = std::max({ks, std::abs(F - static_cast<double>(i) / n), std::abs(F - static_cast<double>(i + 1) / n)});
  }
  EXPECT_LT(ks, 1.63 / std::sqrt(static_cast<double>(n)));  // p > 0.01
}

TEST(Simulate, ExitTimeFromCentre) {
  // E tau = (1 - |x|^2) / (4 kappa) solves kappa Lap w = -1 with w = 0 on the circle.
  const auto field = ConductivityField::constant(0.5);
  SimParams p;
  p.dt = 1e-4;
  const int n = 20000;
  RunningStats s;
  for (int i = 0; i < n; ++i) {
    auto rng = seed_rng(99, i);
    const auto res = sample_absorbed(Vec2(0.0, 0.0), field, kDisk, rng, p);
    EXPECT_NEAR(res.exit_point.cartesian.norm(), 1.0, 1e-12);
    s.add(res.exit_time);
  }
  EXPECT_NEAR(s.mean, 0.5, 4 * s.stderr_of_mean() + 0.01);
}

TEST(Simulate, AbsorbedRejectsBoundaryStart) {
  auto rng = seed_rng(1, 0);
  EXPECT_THROW(sample_absorbed(Vec2(1.0, 0.0), ConductivityField::constant(1.0), kDisk, rng, SimParams{}),
               PreconditionError);
  const auto res = sample_absorbed(Vec2(0.5, 0.0), ConductivityField::constant(1.0), kDisk, rng, SimParams{}, true);
  ASSERT_TRUE(res.path.has_value());
  EXPECT_EQ(res.path->final_time(), res.exit_time);
  EXPECT_GT(res.exit_time, 0.0);
}

TEST(Simulate, BoundaryOccupationVanishesWithDt) {
  const auto field = ConductivityField::constant(1.0);
  auto fraction = [&](double dt) {
    SimParams p;
    p.dt = dt;
    double contacts = 0, steps = 0;
    for (int i = 0; i < 20; ++i) {
      auto rng = seed_rng(5, i);
      const auto path = sample_path(Vec2(0.0, 0.0), 2.0, field, kDisk, rng, p);
      steps += path.size() - 1;
      contacts += std::count(path.boundary_flags.begin(), path.boundary_flags.end(), 1);
    }
    return contacts / steps;
  };
  const double coarse = fraction(1e-3), fine = fraction(1e-4);
  EXPECT_LT(fine, 0.5 * coarse);
}

TEST(Simulate, ContactLogMatchesPathRecord) {
  const auto field = ConductivityField::constant(0.5);
  SimParams p;
  p.dt = 1e-3;
  auto a = seed_rng(4, 4), b = seed_rng(4, 4);
  const auto path = sample_path(Vec2(0.0, 0.0), 3.0, field, kDisk, a, p);
  ReflectedStepper stepper(field, kDisk, p);
  ContactLog log;
  ContactRecorder rec{log};
  run_reflected(Vec2(0.0, 0.0), stepper, b, rec, [](double t, double, std::int64_t) { return t >= 3.0; });
  const auto from_path = contacts_of(path, kDisk);
  ASSERT_EQ(log.size(), from_path.size());
  for (std::size_t j = 0; j < log.size(); ++j) {
    EXPECT_EQ(log.step[j], from_path.step[j]);
    EXPECT_EQ(log.L[j], from_path.L[j]);
    EXPECT_NEAR(log.point[j].theta, from_path.point[j].theta, 1e-12);
  }
  EXPECT_EQ(log.final_local_time, path.final_local_time());
}
