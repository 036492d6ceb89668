#pragma once

// Finite-volume solvers for div(kappa grad u) = 0 with Dirichlet or co-normal
// boundary data, on a node grid over the square [0, s]^2 or a polar grid over
// the unit disk. Each node owns a dual cell; face fluxes use kappa at the
// face midpoint, so the discrete operator is symmetric and conservative.
// Only isotropic conductivities are supported.

#include "bdlab/conductivity.hpp"
#include "bdlab/core.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace bdlab {

struct SquareGrid {
  int n = 64;          ///< cells per side; nodes are (n + 1)^2
  double side = 1.0;

  double h() const { return side / n; }
  int nodes_per_side() const { return n + 1; }
  int index(int i, int j) const { return j * (n + 1) + i; }
  Vec2 point(int i, int j) const { return Vec2(i * h(), j * h()); }
  bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == n || j == n; }
  /// Arc-length parameter of a boundary node, counterclockwise from (0, 0).
  double boundary_param(int i, int j) const {
    if (j == 0) return i * h();
    if (i == n) return side + j * h();
    if (j == n) return 3 * side - i * h();
    return 4 * side - j * h();
  }
};

struct PolarGrid {
  int n_r = 64;       ///< rings; ring n_r is the unit circle
  int n_theta = 128;  ///< nodes per ring

  double h() const { return 1.0 / n_r; }
  double k() const { return kTwoPi / n_theta; }
  int size() const { return 1 + n_r * n_theta; }
  int index(int i, int j) const { return i == 0 ? 0 : 1 + (i - 1) * n_theta + ((j % n_theta) + n_theta) % n_theta; }
  Vec2 point(int i, int j) const { return i * h() * Vec2(std::cos(j * k()), std::sin(j * k())); }
};

/// Nodal values on a square or polar grid with interpolation.
struct GridFunction {
  enum class Kind { Square, Polar } kind = Kind::Square;
  SquareGrid square;
  PolarGrid polar;
  std::vector<double> values;
  double residual = 0.0;  ///< max-norm residual of the solved linear system

  double node(int i, int j) const {
    return values[static_cast<std::size_t>(kind == Kind::Square ? square.index(i, j) : polar.index(i, j))];
  }

  /// Bilinear interpolation (in x, y on the square; in r, theta on the disk).
  double operator()(const Vec2& x) const {
    if (kind == Kind::Square) {
      const double h = square.h();
      const double fx = std::clamp(x.x() / h, 0.0, static_cast<double>(square.n));
      const double fy = std::clamp(x.y() / h, 0.0, static_cast<double>(square.n));
      const int i = std::min(static_cast<int>(fx), square.n - 1), j = std::min(static_cast<int>(fy), square.n - 1);
      const double a = fx - i, b = fy - j;
      return (1 - a) * (1 - b) * node(i, j) + a * (1 - b) * node(i + 1, j) + (1 - a) * b * node(i, j + 1) +
             a * b * node(i + 1, j + 1);
    }
    const double r = std::min(x.norm(), 1.0);
    const double t = wrap_angle(std::atan2(x.y(), x.x()));
    const double ft = t / polar.k();
    const int j = static_cast<int>(ft) % polar.n_theta;
    const double b = ft - std::floor(ft);
    const double fr = r / polar.h();
    const int i = std::min(static_cast<int>(fr), polar.n_r - 1);
    const double a = fr - i;
    auto ring = [&](int ii) { return ii == 0 ? node(0, 0) : (1 - b) * node(ii, j) + b * node(ii, j + 1); };
    return (1 - a) * ring(i) + a * ring(i + 1);
  }
};

namespace detail {

using SparseMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

inline void require_isotropic(const ConductivityField& field) {
  if (!field.isotropic()) throw PreconditionError("finite-volume solvers support isotropic conductivities only");
}

/// Face couplings c_f = kappa_f * |face| / distance for every neighbour pair.
struct Coupling {
  int a, b;
  double c;
};

inline std::vector<Coupling> square_couplings(const SquareGrid& g, const ConductivityField& field) {
  std::vector<Coupling> out;
  const double h = g.h();
  for (int j = 0; j <= g.n; ++j) {
    for (int i = 0; i <= g.n; ++i) {
      if (i < g.n) {
        const double len = (j == 0 || j == g.n) ? 0.5 * h : h;
        out.push_back({g.index(i, j), g.index(i + 1, j), field.scalar(Vec2((i + 0.5) * h, j * h)) * len / h});
      }
      if (j < g.n) {
        const double len = (i == 0 || i == g.n) ? 0.5 * h : h;
        out.push_back({g.index(i, j), g.index(i, j + 1), field.scalar(Vec2(i * h, (j + 0.5) * h)) * len / h});
      }
    }
  }
  return out;
}

inline std::vector<Coupling> polar_couplings(const PolarGrid& g, const ConductivityField& field) {
  std::vector<Coupling> out;
  const double h = g.h(), k = g.k();
  for (int j = 0; j < g.n_theta; ++j) {
    const double th = j * k;
    const Vec2 dir(std::cos(th), std::sin(th));
    // Centre cell to the first ring.
    out.push_back({0, g.index(1, j), field.scalar(0.5 * h * dir) * (0.5 * h * k) / h});
    for (int i = 1; i <= g.n_r; ++i) {
      const double r = i * h;
      if (i < g.n_r) {
        const double rho = r + 0.5 * h;
        out.push_back({g.index(i, j), g.index(i + 1, j), field.scalar(rho * dir) * rho * k / h});
      }
      const double tm = th + 0.5 * k;
      const double len = i == g.n_r ? 0.5 * h : h;
      out.push_back({g.index(i, j), g.index(i, j + 1),
                     field.scalar(r * Vec2(std::cos(tm), std::sin(tm))) * len / (r * k)});
    }
  }
  return out;
}

inline SparseMat assemble(int n, const std::vector<Coupling>& cs) {
  Triplets t;
  t.reserve(cs.size() * 4);
  for (const auto& c : cs) {
    t.emplace_back(c.a, c.a, -c.c);
    t.emplace_back(c.b, c.b, -c.c);
    t.emplace_back(c.a, c.b, c.c);
    t.emplace_back(c.b, c.a, c.c);
  }
  SparseMat A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

/// Solves A u = 0 on the free nodes with u fixed on the others.
inline std::vector<double> solve_with_fixed(const SparseMat& A, const std::vector<char>& fixed,
                                            const std::vector<double>& fixed_values, double& residual) {
  const int n = static_cast<int>(A.rows());
  std::vector<int> map(n, -1);
  int m = 0;
  for (int i = 0; i < n; ++i)
    if (!fixed[i]) map[i] = m++;
  Triplets t;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SparseMat::InnerIterator it(A, col); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if (fixed[r]) continue;
      if (fixed[c]) rhs[map[r]] += it.value() * fixed_values[c];
      else t.emplace_back(map[r], map[c], -it.value());
    }
  }
  SparseMat K(m, m);
  K.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<SparseMat> solver(K);
  if (solver.info() != Eigen::Success) throw SolverError("Dirichlet factorization failed");
  const Eigen::VectorXd x = solver.solve(rhs);
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  residual = (K * x - rhs).cwiseAbs().maxCoeff() / scale;
  std::vector<double> u(fixed_values);
  for (int i = 0; i < n; ++i)
    if (!fixed[i]) u[i] = x[map[i]];
  return u;
}

/// Solves A u = -F with sum(w u) = 0 by a bordered system.
inline std::vector<double> solve_neumann_system(const SparseMat& A, const std::vector<double>& F,
                                                const std::vector<double>& w, double& residual) {
  const int n = static_cast<int>(A.rows());
  Triplets t;
  for (int col = 0; col < A.outerSize(); ++col)
    for (SparseMat::InnerIterator it(A, col); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (int i = 0; i < n; ++i) {
    t.emplace_back(n, i, w[i]);
    t.emplace_back(i, n, w[i]);
  }
  SparseMat B(n + 1, n + 1);
  B.setFromTriplets(t.begin(), t.end());
  Eigen::VectorXd rhs(n + 1);
  for (int i = 0; i < n; ++i) rhs[i] = -F[i];
  rhs[n] = 0.0;
  Eigen::SparseLU<SparseMat> solver;
  solver.compute(B);
  if (solver.info() != Eigen::Success) throw SolverError("Neumann factorization failed");
  const Eigen::VectorXd x = solver.solve(rhs);
  residual = (B * x - rhs).cwiseAbs().maxCoeff() / std::max(1.0, rhs.cwiseAbs().maxCoeff());
  return std::vector<double>(x.data(), x.data() + n);
}

inline void check_compatibility(const std::vector<double>& F) {
  double sum = 0.0, mag = 0.0;
  for (double f : F) {
    sum += f;
    mag += std::abs(f);
  }
  if (std::abs(sum) > 1e-12 * std::max(1.0, mag))
    throw CompatibilityError("boundary flux violates current conservation: int f dsigma = " + std::to_string(sum) +
                             " (must vanish)");
}

}  // namespace detail

using BoundaryData = std::function<double(double)>;  ///< function of the boundary parameter

inline GridFunction solve_dirichlet_fd(const SquareGrid& g, const ConductivityField& field, const BoundaryData& phi) {
  detail::require_isotropic(field);
  const int n = g.nodes_per_side() * g.nodes_per_side();
  const auto A = detail::assemble(n, detail::square_couplings(g, field));
  std::vector<char> fixed(n, 0);
  std::vector<double> vals(n, 0.0);
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i <= g.n; ++i)
      if (g.on_boundary(i, j)) {
        fixed[g.index(i, j)] = 1;
        vals[g.index(i, j)] = phi(g.boundary_param(i, j));
      }
  GridFunction u;
  u.kind = GridFunction::Kind::Square;
  u.square = g;
  u.values = detail::solve_with_fixed(A, fixed, vals, u.residual);
  if (u.residual > 1e-10) throw SolverError("Dirichlet solve residual " + std::to_string(u.residual));
  return u;
}

inline GridFunction solve_dirichlet_fd(const PolarGrid& g, const ConductivityField& field, const BoundaryData& phi) {
  detail::require_isotropic(field);
  const auto A = detail::assemble(g.size(), detail::polar_couplings(g, field));
  std::vector<char> fixed(g.size(), 0);
  std::vector<double> vals(g.size(), 0.0);
  for (int j = 0; j < g.n_theta; ++j) {
    fixed[g.index(g.n_r, j)] = 1;
    vals[g.index(g.n_r, j)] = phi(j * g.k());
  }
  GridFunction u;
  u.kind = GridFunction::Kind::Polar;
  u.polar = g;
  u.values = detail::solve_with_fixed(A, fixed, vals, u.residual);
  if (u.residual > 1e-10) throw SolverError("Dirichlet solve residual " + std::to_string(u.residual));
  return u;
}

/// Co-normal problem with flux density f; returns the solution with zero mean over the domain.
inline GridFunction solve_neumann_fd(const SquareGrid& g, const ConductivityField& field, const BoundaryData& f) {
  detail::require_isotropic(field);
  const int n = g.nodes_per_side() * g.nodes_per_side();
  const double h = g.h();
  const auto A = detail::assemble(n, detail::square_couplings(g, field));
  std::vector<double> F(n, 0.0), w(n, 0.0);
  for (int j = 0; j <= g.n; ++j) {
    for (int i = 0; i <= g.n; ++i) {
      const bool bi = i == 0 || i == g.n, bj = j == 0 || j == g.n;
      w[g.index(i, j)] = (bi ? 0.5 : 1.0) * (bj ? 0.5 : 1.0) * h * h;
      if (!g.on_boundary(i, j)) continue;
      // Midpoint rule on the two half-segments of boundary owned by the node.
      const double s = g.boundary_param(i, j), per = 4.0 * g.side;
      auto fw = [&](double q) { return f(q - per * std::floor(q / per)); };
      F[g.index(i, j)] = 0.5 * h * (fw(s - 0.25 * h) + fw(s + 0.25 * h));
    }
  }
  detail::check_compatibility(F);
  GridFunction u;
  u.kind = GridFunction::Kind::Square;
  u.square = g;
  u.values = detail::solve_neumann_system(A, F, w, u.residual);
  if (u.residual > 1e-8) throw SolverError("Neumann solve residual " + std::to_string(u.residual));
  return u;
}

inline GridFunction solve_neumann_fd(const PolarGrid& g, const ConductivityField& field, const BoundaryData& f) {
  detail::require_isotropic(field);
  const double h = g.h(), k = g.k();
  const auto A = detail::assemble(g.size(), detail::polar_couplings(g, field));
  std::vector<double> F(g.size(), 0.0), w(g.size(), 0.0);
  w[0] = kPi * 0.25 * h * h;
  for (int i = 1; i <= g.n_r; ++i) {
    const double r_in = (i - 0.5) * h, r_out = std::min(1.0, (i + 0.5) * h);
    for (int j = 0; j < g.n_theta; ++j) w[g.index(i, j)] = 0.5 * k * (r_out * r_out - r_in * r_in);
  }
  for (int j = 0; j < g.n_theta; ++j) F[g.index(g.n_r, j)] = f(j * k) * k;
  detail::check_compatibility(F);
  GridFunction u;
  u.kind = GridFunction::Kind::Polar;
  u.polar = g;
  u.values = detail::solve_neumann_system(A, F, w, u.residual);
  if (u.residual > 1e-8) throw SolverError("Neumann solve residual " + std::to_string(u.residual));
  return u;
}

/// Discrete DtN map on the square: column j holds the outward flux density at
/// every boundary node for Dirichlet data equal to 1 at boundary node j.
struct SquareDtN {
  SquareGrid grid;
  std::vector<double> params;  ///< boundary parameter of each boundary node
  std::vector<double> weights; ///< boundary length owned by each node
  Eigen::MatrixXd M;

  /// Discrete jump kernel N(x_i, y_j) = -M_ij / w_j off the diagonal.
  double kernel(int i, int j) const {
    if (i == j) throw SingularityError("discrete kernel is undefined on the diagonal");
    return -M(i, j) / weights[static_cast<std::size_t>(j)];
  }
};

inline SquareDtN square_dtn_matrix(const SquareGrid& g, const ConductivityField& field) {
  detail::require_isotropic(field);
  const int n = g.nodes_per_side() * g.nodes_per_side();
  const auto cs = detail::square_couplings(g, field);
  const auto A = detail::assemble(n, cs);
  std::vector<int> bnodes;
  SquareDtN out;
  out.grid = g;
  // Boundary nodes in counterclockwise parameter order.
  for (int i = 0; i < g.n; ++i) bnodes.push_back(g.index(i, 0));
  for (int j = 0; j < g.n; ++j) bnodes.push_back(g.index(g.n, j));
  for (int i = g.n; i > 0; --i) bnodes.push_back(g.index(i, g.n));
  for (int j = g.n; j > 0; --j) bnodes.push_back(g.index(0, j));
  const int nb = static_cast<int>(bnodes.size());
  std::vector<char> fixed(n, 0);
  for (int b : bnodes) fixed[b] = 1;
  for (int b : bnodes) {
    const int i = b % (g.n + 1), j = b / (g.n + 1);
    out.params.push_back(g.boundary_param(i, j));
    out.weights.push_back(g.h());
  }
  // Interior factorization shared by all columns.
  std::vector<int> map(n, -1);
  int m = 0;
  for (int i = 0; i < n; ++i)
    if (!fixed[i]) map[i] = m++;
  detail::Triplets t;
  for (int col = 0; col < A.outerSize(); ++col)
    for (detail::SparseMat::InnerIterator it(A, col); it; ++it)
      if (!fixed[it.row()] && !fixed[it.col()]) t.emplace_back(map[it.row()], map[it.col()], -it.value());
  detail::SparseMat K(m, m);
  K.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<detail::SparseMat> solver(K);
  if (solver.info() != Eigen::Success) throw SolverError("DtN factorization failed");

  out.M = Eigen::MatrixXd::Zero(nb, nb);
  for (int cj = 0; cj < nb; ++cj) {
    std::vector<double> u(n, 0.0);
    u[bnodes[cj]] = 1.0;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (const auto& c : cs) {
      if (!fixed[c.a] && fixed[c.b]) rhs[map[c.a]] += c.c * u[c.b];
      if (!fixed[c.b] && fixed[c.a]) rhs[map[c.b]] += c.c * u[c.a];
    }
    const Eigen::VectorXd x = solver.solve(rhs);
    for (int i = 0; i < n; ++i)
      if (!fixed[i]) u[i] = x[map[i]];
    // Outward boundary flux of each boundary cell balances its interior-face fluxes.
    std::vector<double> out_flux(n, 0.0);
    for (const auto& c : cs) {
      out_flux[c.a] -= c.c * (u[c.b] - u[c.a]);
      out_flux[c.b] -= c.c * (u[c.a] - u[c.b]);
    }
    for (int ri = 0; ri < nb; ++ri) out.M(ri, cj) = out_flux[bnodes[ri]] / out.weights[ri];
  }
  return out;
}

}  // namespace bdlab
