#pragma once

// Planar domains: unit disk, unit square and smooth star-shaped domains
// r = rho(theta). Every domain exposes a boundary parametrization (angle for
// disk/star, counterclockwise arc length from the origin for the square),
// outward normals, surface measure and the nearest-point projection used by
// the reflection scheme.

#include "bdlab/core.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace bdlab {

enum class DomainKind { UnitDisk, UnitSquare, StarSmooth };

inline std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::UnitDisk: return "unit-disk";
    case DomainKind::UnitSquare: return "unit-square";
    case DomainKind::StarSmooth: return "star-smooth";
  }
  return "?";
}

/// A point of the boundary together with its parameter value.
struct BoundaryPoint {
  double theta = 0.0;  ///< angle in [0, 2pi) or arc length in [0, 4) on the square
  Vec2 cartesian = Vec2::Zero();
  double density = 1.0;  ///< |d curve / d theta|, the local surface-measure density
};

/// Result of the nearest-point projection onto the boundary.
struct Projection {
  BoundaryPoint foot;
  Vec2 normal = Vec2::UnitX();  ///< outward unit normal at the foot
  double depth = 0.0;           ///< distance to the foot for outside points, 0 inside
  bool inside = false;          ///< true when the point lies in the open domain
};

/// Boundary arc [lo, hi] in parameter units, understood modulo the period.
struct Arc {
  double lo = 0.0;
  double hi = 0.0;
};

class Domain {
public:
  static Domain unit_disk() { return Domain(DomainKind::UnitDisk, {}); }
  static Domain unit_square() { return Domain(DomainKind::UnitSquare, {}); }

  /// rho(theta) = c[0] + sum_k c[2k-1] cos(k theta) + c[2k] sin(k theta).
  static Domain star(std::vector<double> rho_coeffs) {
    if (rho_coeffs.empty()) throw PreconditionError("star domain needs at least one radius coefficient");
    return Domain(DomainKind::StarSmooth, std::move(rho_coeffs));
  }

  DomainKind kind() const { return kind_; }
  std::span<const double> rho_coeffs() const { return rho_coeffs_; }

  /// Parameter period: 2pi for angular parametrizations, 4 for the square.
  double period() const { return kind_ == DomainKind::UnitSquare ? 4.0 : kTwoPi; }
  double boundary_length() const { return boundary_length_; }
  double area() const { return area_; }
  Vec2 centroid() const { return centroid_; }
  /// Half of the projection reach; deeper overshoots are rejected.
  double reach() const { return reach_; }

  double rho(double theta) const {
    double r = rho_coeffs_[0];
    for (std::size_t k = 1; 2 * k - 1 < rho_coeffs_.size(); ++k) {
      const double a = rho_coeffs_[2 * k - 1];
      const double b = 2 * k < rho_coeffs_.size() ? rho_coeffs_[2 * k] : 0.0;
      r += a * std::cos(k * theta) + b * std::sin(k * theta);
    }
    return r;
  }

  BoundaryPoint boundary_param(double theta) const {
    BoundaryPoint p;
    switch (kind_) {
      case DomainKind::UnitDisk:
        p.theta = wrap_angle(theta);
        p.cartesian = Vec2(std::cos(p.theta), std::sin(p.theta));
        p.density = 1.0;
        break;
      case DomainKind::UnitSquare: {
        double s = std::fmod(theta, 4.0);
        if (s < 0.0) s += 4.0;
        if (s >= 4.0) s = 0.0;
        p.theta = s;
        p.cartesian = square_point(s);
        p.density = 1.0;
        break;
      }
      case DomainKind::StarSmooth: {
        p.theta = wrap_angle(theta);
        const auto d = star_derivatives(p.theta);
        p.cartesian = d.c;
        p.density = d.c1.norm();
        break;
      }
    }
    return p;
  }

  Vec2 normal(double theta) const {
    switch (kind_) {
      case DomainKind::UnitDisk: return Vec2(std::cos(theta), std::sin(theta));
      case DomainKind::UnitSquare: {
        double s = std::fmod(theta, 4.0);
        if (s < 0.0) s += 4.0;
        return square_normal(s);
      }
      case DomainKind::StarSmooth: {
        const auto d = star_derivatives(theta);
        return Vec2(d.c1.y(), -d.c1.x()) / d.c1.norm();
      }
    }
    return Vec2::UnitX();
  }

  /// Surface measure of the arc [theta_a, theta_b]; requires a <= b <= a + period.
  double surface_measure(double theta_a, double theta_b) const {
    if (theta_b < theta_a || theta_b > theta_a + period() * (1.0 + 1e-15))
      throw PreconditionError("surface_measure expects theta_a <= theta_b <= theta_a + period");
    if (kind_ != DomainKind::StarSmooth) return theta_b - theta_a;
    if (theta_b - theta_a >= period()) return boundary_length_;
    auto density = [this](double t) { return star_derivatives(t).c1.norm(); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(density, theta_a, theta_b, 20,
                                                                         1e-14);
  }

  bool contains(const Vec2& x) const {
    switch (kind_) {
      case DomainKind::UnitDisk: return x.squaredNorm() < 1.0;
      case DomainKind::UnitSquare: return x.x() > 0.0 && x.x() < 1.0 && x.y() > 0.0 && x.y() < 1.0;
      case DomainKind::StarSmooth: return x.norm() < rho(std::atan2(x.y(), x.x()));
    }
    return false;
  }

  bool in_closure(const Vec2& x, double tol = 1e-9) const {
    if (contains(x)) return true;
    return project_unchecked(x).depth <= tol;
  }

  /// Nearest boundary point. Throws ProjectionReachError for overshoots beyond reach().
  Projection project_to_boundary(const Vec2& x) const {
    Projection p = project_unchecked(x);
    if (!p.inside && p.depth > reach_)
      throw ProjectionReachError("point " + std::to_string(x.x()) + "," + std::to_string(x.y()) +
                                 " lies beyond the projection reach");
    return p;
  }

  /// Projection without the reach check; callers in the step loop test depth themselves.
  Projection project_unchecked(const Vec2& x) const {
    switch (kind_) {
      case DomainKind::UnitDisk: return project_disk(x);
      case DomainKind::UnitSquare: return project_square(x);
      case DomainKind::StarSmooth: return project_star(x);
    }
    return {};
  }

  /// Parameter distance between two boundary parameters, in [0, period/2].
  double separation(double theta_a, double theta_b) const {
    const double per = period();
    double d = std::fmod(std::abs(theta_b - theta_a), per);
    return std::min(d, per - d);
  }

  bool arc_contains(const Arc& arc, double theta) const {
    const double per = period();
    double rel = std::fmod(theta - arc.lo, per);
    if (rel < 0.0) rel += per;
    return rel <= arc.hi - arc.lo;
  }

  /// Uniform point of the open domain (Lebesgue measure).
  template <class Rng>
  Vec2 sample_interior(Rng& rng) const {
    switch (kind_) {
      case DomainKind::UnitSquare: return Vec2(rng.uniform(), rng.uniform());
      default: {
        const double r = rho_max_;
        for (;;) {
          Vec2 x(r * (2.0 * rng.uniform() - 1.0), r * (2.0 * rng.uniform() - 1.0));
          if (contains(x)) return x;
        }
      }
    }
  }

  /// Boundary point distributed according to the normalized surface measure.
  template <class Rng>
  BoundaryPoint sample_boundary(Rng& rng) const {
    if (kind_ != DomainKind::StarSmooth) return boundary_param(rng.uniform() * period());
    for (;;) {
      BoundaryPoint p = boundary_param(rng.uniform() * kTwoPi);
      if (rng.uniform() * density_max_ <= p.density) return p;
    }
  }

private:
  struct StarDerivs {
    Vec2 c, c1, c2;
  };

  Domain(DomainKind kind, std::vector<double> coeffs) : kind_(kind), rho_coeffs_(std::move(coeffs)) {
    switch (kind_) {
      case DomainKind::UnitDisk:
        rho_coeffs_ = {1.0};
        boundary_length_ = kTwoPi;
        area_ = kPi;
        centroid_ = Vec2::Zero();
        reach_ = 0.5;
        rho_max_ = 1.0;
        break;
      case DomainKind::UnitSquare:
        boundary_length_ = 4.0;
        area_ = 1.0;
        centroid_ = Vec2(0.5, 0.5);
        reach_ = 0.5;
        break;
      case DomainKind::StarSmooth: init_star(); break;
    }
  }

  void init_star() {
    // Periodic trapezoid rule: spectrally accurate for trigonometric rho.
    constexpr int m = 4096;
    double length = 0.0, area = 0.0, rho_min = std::numeric_limits<double>::infinity();
    double min_curv_radius = std::numeric_limits<double>::infinity();
    Vec2 moment = Vec2::Zero();
    for (int i = 0; i < m; ++i) {
      const double t = kTwoPi * i / m;
      const double r = rho(t);
      if (!(r > 0.0)) throw PreconditionError("star domain radius must stay positive");
      const auto d = star_derivatives(t);
      const double speed = d.c1.norm();
      length += speed;
      area += 0.5 * r * r;
      moment += (r * r * r / 3.0) * Vec2(std::cos(t), std::sin(t));
      rho_min = std::min(rho_min, r);
      rho_max_ = std::max(rho_max_, r);
      density_max_ = std::max(density_max_, speed);
      const double cross = std::abs(d.c1.x() * d.c2.y() - d.c1.y() * d.c2.x());
      if (cross > 0.0) min_curv_radius = std::min(min_curv_radius, speed * speed * speed / cross);
    }
    const double w = kTwoPi / m;
    boundary_length_ = length * w;
    area_ = area * w;
    centroid_ = moment * w / area_;
    reach_ = 0.5 * std::min(rho_min, min_curv_radius);
  }

  StarDerivs star_derivatives(double t) const {
    double r = rho_coeffs_[0], r1 = 0.0, r2 = 0.0;
    for (std::size_t k = 1; 2 * k - 1 < rho_coeffs_.size(); ++k) {
      const double a = rho_coeffs_[2 * k - 1];
      const double b = 2 * k < rho_coeffs_.size() ? rho_coeffs_[2 * k] : 0.0;
      const double kk = static_cast<double>(k);
      const double c = std::cos(kk * t), s = std::sin(kk * t);
      r += a * c + b * s;
      r1 += kk * (-a * s + b * c);
      r2 += -kk * kk * (a * c + b * s);
    }
    const Vec2 e(std::cos(t), std::sin(t));
    const Vec2 e_perp(-std::sin(t), std::cos(t));
    return {r * e, r1 * e + r * e_perp, (r2 - r) * e + 2.0 * r1 * e_perp};
  }

  static Vec2 square_point(double s) {
    if (s < 1.0) return Vec2(s, 0.0);
    if (s < 2.0) return Vec2(1.0, s - 1.0);
    if (s < 3.0) return Vec2(3.0 - s, 1.0);
    return Vec2(0.0, 4.0 - s);
  }

  static Vec2 square_normal(double s) {
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    if (s == 0.0) return Vec2(-inv_sqrt2, -inv_sqrt2);
    if (s == 1.0) return Vec2(inv_sqrt2, -inv_sqrt2);
    if (s == 2.0) return Vec2(inv_sqrt2, inv_sqrt2);
    if (s == 3.0) return Vec2(-inv_sqrt2, inv_sqrt2);
    if (s < 1.0) return Vec2(0.0, -1.0);
    if (s < 2.0) return Vec2(1.0, 0.0);
    if (s < 3.0) return Vec2(0.0, 1.0);
    return Vec2(-1.0, 0.0);
  }

  static double square_param(const Vec2& p) {
    if (p.y() == 0.0 && p.x() < 1.0) return p.x();
    if (p.x() == 1.0 && p.y() < 1.0) return 1.0 + p.y();
    if (p.y() == 1.0 && p.x() > 0.0) return 3.0 - p.x();
    return p.y() > 0.0 ? 4.0 - p.y() : 0.0;
  }

  static Projection project_disk(const Vec2& x) {
    Projection p;
    const double r = x.norm();
    const double theta = r > 0.0 ? wrap_angle(std::atan2(x.y(), x.x())) : 0.0;
    p.foot.theta = theta;
    p.normal = r > 0.0 ? Vec2(x / r) : Vec2::UnitX();
    p.foot.cartesian = p.normal;
    p.inside = r < 1.0;
    p.depth = p.inside ? 0.0 : r - 1.0;
    return p;
  }

  static Projection project_square(const Vec2& x) {
    Projection p;
    p.inside = x.x() > 0.0 && x.x() < 1.0 && x.y() > 0.0 && x.y() < 1.0;
    if (p.inside) {
      // Nearest face; ties resolve in the order bottom, right, top, left.
      const double d[4] = {x.y(), 1.0 - x.x(), 1.0 - x.y(), x.x()};
      const int face = static_cast<int>(std::min_element(d, d + 4) - d);
      Vec2 foot = x;
      switch (face) {
        case 0: foot.y() = 0.0; break;
        case 1: foot.x() = 1.0; break;
        case 2: foot.y() = 1.0; break;
        default: foot.x() = 0.0; break;
      }
      p.foot.cartesian = foot;
      p.foot.theta = square_param(foot);
      p.normal = square_normal(p.foot.theta);
      p.depth = 0.0;
      return p;
    }
    const Vec2 foot(std::clamp(x.x(), 0.0, 1.0), std::clamp(x.y(), 0.0, 1.0));
    const Vec2 d = x - foot;
    p.depth = d.norm();
    p.foot.cartesian = foot;
    p.foot.theta = square_param(foot);
    p.normal = p.depth > 0.0 ? Vec2(d / p.depth) : square_normal(p.foot.theta);
    return p;
  }

  Projection project_star(const Vec2& x) const {
    Projection p;
    double t = std::atan2(x.y(), x.x());
    p.inside = x.norm() < rho(t);
    // Newton iteration on g(t) = (c(t) - x) . c'(t).
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
      const auto d = star_derivatives(t);
      const Vec2 diff = d.c - x;
      const double g = diff.dot(d.c1);
      double h = d.c1.squaredNorm() + diff.dot(d.c2);
      if (h <= 0.0) h = d.c1.squaredNorm();
      const double step = g / h;
      t -= step;
      if (std::abs(step) < 1e-12) {
        converged = true;
        break;
      }
    }
    if (!converged) throw ProjectionReachError("star-domain projection did not converge");
    p.foot = boundary_param(t);
    p.normal = normal(p.foot.theta);
    p.depth = p.inside ? 0.0 : (x - p.foot.cartesian).norm();
    return p;
  }

  DomainKind kind_;
  std::vector<double> rho_coeffs_;
  double boundary_length_ = 0.0;
  double area_ = 0.0;
  Vec2 centroid_ = Vec2::Zero();
  double reach_ = 0.5;
  double rho_max_ = 0.0;
  double density_max_ = 0.0;
};

/// True when two boundary arcs share a point (touching endpoints included).
inline bool arcs_overlap(const Domain& domain, const Arc& a, const Arc& b) {
  return domain.arc_contains(a, b.lo) || domain.arc_contains(a, b.hi) || domain.arc_contains(b, a.lo) ||
         domain.arc_contains(b, a.hi);
}

}  // namespace bdlab
