#include "bdlab/reference/fd.hpp"
#include "bdlab/reference/kernels.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

using namespace bdlab;

namespace {
// Cartesian point of a unit-square boundary parameter.
Vec2 square_point(double s) {
  if (s < 1) return Vec2(s, 0);
  if (s < 2) return Vec2(1, s - 1);
  if (s < 3) return Vec2(3 - s, 1);
  return Vec2(0, 4 - s);
}
}  // namespace

TEST(FiniteVolume, DirichletHarmonicPolynomialOnSquare) {
  const SquareGrid g{128, 1.0};
  const auto u = solve_dirichlet_fd(g, ConductivityField::constant(1.0), [](double s) {
    const Vec2 p = square_point(s);
    return p.x() * p.x() - p.y() * p.y();
  });
  EXPECT_NEAR(u(Vec2(0.5, 0.5)), 0.0, 1e-3);
  EXPECT_NEAR(u(Vec2(0.25, 0.75)), 0.0625 - 0.5625, 1e-3);
  EXPECT_LE(u.residual, 1e-10);
}

TEST(FiniteVolume, DirichletConstantIsExact) {
  const auto field = ConductivityField::radial({1.0, 0.0, 1.0});
  const auto u = solve_dirichlet_fd(SquareGrid{32, 1.0}, field, [](double) { return 2.5; });
  for (double v : u.values) EXPECT_NEAR(v, 2.5, 1e-12);
  const auto w = solve_dirichlet_fd(PolarGrid{16, 32}, field, [](double) { return -1.0; });
  for (double v : w.values) EXPECT_NEAR(v, -1.0, 1e-12);
}

TEST(FiniteVolume, DirichletMaximumPrinciple) {
  const auto field = ConductivityField::bump(Vec2(0.5, 0.5), 0.3, 5.0);
  const auto u = solve_dirichlet_fd(SquareGrid{48, 1.0}, field, [](double s) { return std::sin(3 * s) + 0.2 * s; });
  double lo = 1e9, hi = -1e9;
  const SquareGrid& g = u.square;
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i <= g.n; ++i)
      if (g.on_boundary(i, j)) {
        lo = std::min(lo, u.node(i, j));
        hi = std::max(hi, u.node(i, j));
      }
  for (double v : u.values) {
    EXPECT_GE(v, lo - 1e-12);
    EXPECT_LE(v, hi + 1e-12);
  }
}

TEST(FiniteVolume, DirichletCosineOnDisk) {
  const auto u = solve_dirichlet_fd(PolarGrid{64, 128}, ConductivityField::constant(1.0),
                                    [](double t) { return std::cos(t); });
  for (const Vec2& x : {Vec2(0.3, 0.0), Vec2(-0.2, 0.5), Vec2(0.0, 0.0), Vec2(0.6, -0.6)}) {
    EXPECT_NEAR(u(x), x.x(), 1e-3);
  }
}

TEST(FiniteVolume, PoissonKernelConsistency) {
  // Narrow smooth bump around theta = 0 against quadrature of K * phi.
  auto phi = [](double t) {
    const double d = wrap_difference(t);
    return std::abs(d) < 0.3 ? std::exp(-1.0 / (1.0 - d * d / 0.09)) : 0.0;
  };
  const auto u = solve_dirichlet_fd(PolarGrid{96, 256}, ConductivityField::constant(1.0), phi);
  for (const Vec2& x : {Vec2(0.5, 0.0), Vec2(0.0, 0.4), Vec2(-0.5, -0.2)}) {
    auto f = [&](double t) { return poisson_kernel_disk(x, t) * phi(t); };
    const double oracle = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -0.3, 0.3, 20, 1e-13);
    EXPECT_NEAR(u(x), oracle, 1e-3);
  }
}

TEST(FiniteVolume, NeumannLinearOnSquare) {
  auto f = [](double s) {
    if (s > 1 && s < 2) return 1.0;
    if (s > 3) return -1.0;
    return 0.0;
  };
  const auto u = solve_neumann_fd(SquareGrid{64, 1.0}, ConductivityField::constant(1.0), f);
  EXPECT_NEAR(u(Vec2(0.75, 0.5)), 0.25, 1e-3);
  EXPECT_NEAR(u(Vec2(0.1, 0.9)), -0.4, 1e-3);
  EXPECT_LE(u.residual, 1e-8);
}

TEST(FiniteVolume, NeumannZeroFlux) {
  const auto u = solve_neumann_fd(SquareGrid{16, 1.0}, ConductivityField::constant(1.0), [](double) { return 0.0; });
  for (double v : u.values) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(FiniteVolume, NeumannCosineOnDisk) {
  const auto u = solve_neumann_fd(PolarGrid{64, 128}, ConductivityField::constant(1.0),
                                  [](double t) { return std::cos(t); });
  EXPECT_NEAR(u(Vec2(0.3, 0.0)), 0.3, 1e-3);
  EXPECT_NEAR(u(Vec2(-0.7, 0.1)), -0.7, 1e-3);
}

TEST(FiniteVolume, NeumannCompatibilityEnforced) {
  EXPECT_THROW(solve_neumann_fd(SquareGrid{16, 1.0}, ConductivityField::constant(1.0), [](double) { return 1.0; }),
               CompatibilityError);
  EXPECT_THROW(solve_neumann_fd(PolarGrid{8, 16}, ConductivityField::constant(1.0), [](double) { return 0.1; }),
               CompatibilityError);
}

TEST(FiniteVolume, AnisotropicRejected) {
  const auto aniso = ConductivityField::custom([](const Vec2&) { return Mat2{{2.0, 0.5}, {0.5, 1.0}}; }, 3.0, false, "aniso");
  EXPECT_THROW(solve_dirichlet_fd(SquareGrid{8, 1.0}, aniso, [](double) { return 0.0; }), PreconditionError);
}

TEST(SquareDtN, AnnihilatesConstantsAndIsSymmetric) {
  const auto d = square_dtn_matrix(SquareGrid{24, 1.0}, ConductivityField::radial({1.0, 0.0, 1.0}));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.M.cols());
  EXPECT_LT((d.M * ones).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((d.M - d.M.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  for (int i = 0; i < d.M.rows(); ++i)
    for (int j = 0; j < d.M.cols(); ++j)
      if (i != j) {
        EXPECT_GE(d.kernel(i, j), -1e-12);
      }
  EXPECT_THROW(d.kernel(3, 3), SingularityError);
}

TEST(SquareDtN, LinearDataGivesNormalFlux) {
  // u = x has outward flux +1 on the right face and -1 on the left.
  const auto d = square_dtn_matrix(SquareGrid{16, 1.0}, ConductivityField::constant(1.0));
  Eigen::VectorXd phi(d.M.cols());
  for (int j = 0; j < phi.size(); ++j) phi[j] = square_point(d.params[j]).x();
  const Eigen::VectorXd flux = d.M * phi;
  for (int i = 0; i < phi.size(); ++i) {
    const Vec2 p = square_point(d.params[i]);
    if (p.y() > 0 && p.y() < 1 && p.x() == 1.0) {
      EXPECT_NEAR(flux[i], 1.0, 1e-10);
    }
    if (p.y() > 0 && p.y() < 1 && p.x() == 0.0) {
      EXPECT_NEAR(flux[i], -1.0, 1e-10);
    }
  }
}

TEST(SquareDtN, DomainScalingLaw) {
  // kappa on the square of side 2 against kappa^R = R^-2 kappa(R x) on the unit square, R = 2.
  const double R = 2.0;
  const auto field = ConductivityField::bump(Vec2(1.0, 1.0), 0.6, 3.0);
  const auto big = square_dtn_matrix(SquareGrid{20, R}, field);
  const auto small = square_dtn_matrix(SquareGrid{20, 1.0}, field.scaled(R));
  double worst = 0.0;
  for (int i = 0; i < big.M.rows(); ++i)
    for (int j = 0; j < big.M.cols(); ++j)
      if (i != j) worst = std::max(worst, std::abs(small.kernel(i, j) - big.kernel(i, j)) / std::abs(big.kernel(i, j)));
  EXPECT_LT(worst, 1e-9);
}
