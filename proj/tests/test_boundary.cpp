#include "bdlab/boundary.hpp"

#include <gtest/gtest.h>

using namespace bdlab;

namespace {

const Domain kDisk = Domain::unit_disk();

PathSample simulated(std::uint64_t id, double horizon = 2.0, double dt = 1e-3) {
  auto rng = seed_rng(314, id);
  SimParams p;
  p.dt = dt;
  return sample_path(Vec2(0.0, 0.0), horizon, ConductivityField::constant(0.5), kDisk, rng, p);
}

/// Synthetic record: L jumps to 1 at t = 1 and stays.
PathSample step_record() {
  PathSample p;
  p.start(Vec2(0.0, 0.0));
  for (int i = 1; i <= 4; ++i) {
    StepRecord r;
    r.t = 0.5 * i;
    r.L = i >= 2 ? 1.0 : 0.0;
    r.contact = i == 2;
    r.x = r.contact ? Vec2(1.0, 0.0) : Vec2(0.1 * i, 0.0);
    p.step(r);
  }
  return p;
}

/// Oracle: tau(s) = inf{t_i : L_i > s} by linear scan; at s = L_final the
/// first time L reaches L_final.
double tau_scan(const PathSample& p, double s) {
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.local_time[i] > s) return p.times[i];
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.local_time[i] >= s) return p.times[i];
  return p.final_time();
}

}  // namespace

TEST(Boundary, StepRecordInverse) {
  const auto p = step_record();
  EXPECT_EQ(local_time_inverse(p, 0.5), 1.0);
  EXPECT_EQ(local_time_inverse(p, 0.0), 1.0);
  EXPECT_EQ(local_time_inverse(p, 1.0), 1.0);
  EXPECT_THROW(local_time_inverse(p, 1.5), OutOfRangeError);
  EXPECT_THROW(local_time_inverse(p, -0.1), OutOfRangeError);
}

TEST(Boundary, InverseMatchesScanAndIsMonotone) {
  for (int k = 0; k < 5; ++k) {
    const auto p = simulated(k);
    const double top = p.final_local_time();
    double prev = -1.0;
    for (int j = 0; j <= 500; ++j) {
      const double s = top * j / 500.0;
      const double t = local_time_inverse(p, s);
      EXPECT_EQ(t, tau_scan(p, s));
      EXPECT_GE(t, prev);
      prev = t;
    }
  }
}

TEST(Boundary, RightInverseProperties) {
  const auto p = simulated(9);
  for (int j = 0; j < 400; ++j) {
    const double s = p.final_local_time() * j / 400.0;
    const std::size_t k = tau_index(p.local_time, s);
    EXPECT_GE(p.local_time[k], s);                 // L_{tau(s)} >= s
    if (k > 0) { EXPECT_LE(p.local_time[k - 1], s); }  // L_{tau(s)-} <= s
  }
}

TEST(Boundary, TraceLiesOnBoundary) {
  const auto p = simulated(3);
  const auto grid = default_s_grid(p);
  const auto tr = boundary_trace(p, grid, kDisk);
  ASSERT_EQ(tr.size(), grid.size());
  for (std::size_t j = 0; j < tr.size(); ++j) {
    EXPECT_NEAR(tr.xi_values[j].cartesian.norm(), 1.0, 1e-12);
    if (j) { EXPECT_GE(tr.source_tau[j], tr.source_tau[j - 1]); }
  }
  EXPECT_TRUE(boundary_trace(p, std::vector<double>{}, kDisk).empty());
}

TEST(Boundary, ConstantPositionGivesConstantTrace) {
  PathSample p;
  p.start(Vec2(1.0, 0.0));
  for (int i = 1; i <= 10; ++i) {
    StepRecord r;
    r.t = 0.1 * i;
    r.x = Vec2(1.0, 0.0);
    r.L = 0.05 * i;
    r.contact = true;
    p.step(r);
  }
  const auto tr = boundary_trace(p, std::vector<double>{0.0, 0.1, 0.2, 0.3}, kDisk);
  for (const auto& xi : tr.xi_values) EXPECT_EQ(xi.theta, 0.0);
  EXPECT_TRUE(jump_events(tr, 1e-3, kDisk).empty());
}

TEST(Boundary, JumpCountNonincreasingInResolution) {
  const auto p = simulated(5, 10.0);
  const auto tr = native_trace(p, kDisk);
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double a : {0.01, 0.05, 0.1, 0.5, 1.0, 2.0, 3.0}) {
    const auto jumps = jump_events(tr, a, kDisk);
    EXPECT_LE(jumps.size(), prev);
    prev = jumps.size();
    for (const auto& j : jumps) {
      EXPECT_GT(j.gap, 0.0);
      EXPECT_GE(kDisk.separation(j.from.theta, j.to.theta), a);
    }
  }
  EXPECT_TRUE(jump_events(tr, kPi + 1e-9, kDisk).empty());
  EXPECT_THROW(jump_events(tr, 0.0, kDisk), PreconditionError);
}

TEST(Boundary, ChangeOfVariablesExactOnSimulatedRecords) {
  for (int k = 0; k < 20; ++k) {
    const auto p = simulated(100 + k);
    const double top = p.final_local_time();
    for (auto f : {std::function<double(double)>([](double t) { return t; }),
                   std::function<double(double)>([](double t) { return std::cos(3 * t); })}) {
      const auto r = change_of_variables_check(p, f, 0.2 * top, 0.9 * top);
      EXPECT_NEAR(r.lhs, r.rhs, 1e-12);
    }
    const auto one = change_of_variables_check(p, [](double) { return 1.0; }, 0.1 * top, 0.7 * top);
    EXPECT_NEAR(one.lhs, 0.6 * top, 1e-12);
    EXPECT_NEAR(one.rhs, 0.6 * top, 1e-12);
  }
  const auto p = simulated(1);
  EXPECT_THROW(change_of_variables_check(p, [](double) { return 1.0; }, 0.5, 0.4), PreconditionError);
}

TEST(Boundary, ChangeOfVariablesHandComputed) {
  // Hand-computed on the step record: the only dL lies at t = 1, so both
  // sides equal f(1) * (0.75 - 0.25).
  const auto p = step_record();
  const auto r = change_of_variables_check(p, [](double t) { return t; }, 0.25, 0.75);
  EXPECT_DOUBLE_EQ(r.lhs, 0.5);  // f(1) * 0.5
  EXPECT_DOUBLE_EQ(r.rhs, 0.5);
}

TEST(Boundary, ScalingLawsExact) {
  for (int k = 0; k < 10; ++k) {
    const auto p = simulated(200 + k);
    for (double R : {1.0, 2.0, 0.5, 3.0}) {
      const auto rep = scaling_check(p, R);
      EXPECT_LE(rep.max_local_time_error, 1e-12 * std::max(1.0, R * p.final_local_time()));
      EXPECT_EQ(rep.max_tau_error, 0.0);
      EXPECT_LE(rep.max_trace_error, 1e-15);
      EXPECT_GT(rep.n_levels, 0u);
    }
  }
}

TEST(Boundary, NativeTraceUsesLocalTimeLevels) {
  const auto p = simulated(12);
  const auto tr = native_trace(p, kDisk);
  ASSERT_FALSE(tr.empty());
  EXPECT_EQ(tr.s_begin(), 0.0);
  for (std::size_t j = 0; j < tr.size(); ++j) {
    // The sample at level s is the contact realising tau(s).
    EXPECT_EQ(tr.source_tau[j], local_time_inverse(p, tr.s_values[j]));
    if (j) { EXPECT_GT(tr.s_values[j], tr.s_values[j - 1]); }
  }
}
