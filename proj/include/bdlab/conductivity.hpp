#pragma once

// Symmetric, uniformly elliptic conductivity fields kappa(x) and the derived
// coefficients of the divergence-form generator div(kappa grad):
//   drift    b(x)  = sum_j d_j kappa_ij(x)
//   diffusion B(x) = sqrt(2 kappa(x))
// Built-in families are isotropic: constant, radial polynomial profile with an
// optional identity collar at r = 1, and a compactly supported interior bump.

#include "bdlab/core.hpp"
#include "bdlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace bdlab {

enum class KappaFamily { Constant, Radial, Bump, Custom };

/// Smooth C-infinity step: 0 for t <= 0, 1 for t >= 1.
inline double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

inline double smooth_step_derivative(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  const double da = a / (t * t), db = -b / ((1.0 - t) * (1.0 - t));
  return (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
}

/// Symmetric square root of a symmetric positive definite 2x2 matrix.
inline Mat2 sqrt_spd(const Mat2& m) {
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double s = std::sqrt(det);
  const double t = std::sqrt(m.trace() + 2.0 * s);
  return (m + s * Mat2::Identity()) / t;
}

class ConductivityField {
public:
  using MatrixFn = std::function<Mat2(const Vec2&)>;

  static ConductivityField constant(double a) {
    if (!(a > 0.0)) throw PreconditionError("constant conductivity must be positive");
    ConductivityField f(KappaFamily::Constant, "constant(" + format(a) + ")");
    f.value_ = a;
    f.base_min_ = f.base_max_ = a;
    f.a1_width_ = a == 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return f;
  }

  /// kappa(r) = sum_k coeffs[k] r^k. With collar_width w > 0 the profile is
  /// blended smoothly to 1 on [1 - 2w, 1 - w] and equals 1 for r >= 1 - w.
  static ConductivityField radial(std::vector<double> coeffs, double collar_width = 0.0) {
    if (coeffs.empty()) throw PreconditionError("radial profile needs coefficients");
    std::string label = "radial(";
    for (std::size_t k = 0; k < coeffs.size(); ++k) label += (k ? "," : "") + format(coeffs[k]);
    label += ")";
    if (collar_width > 0.0) label += "+collar(" + format(collar_width) + ")";
    ConductivityField f(KappaFamily::Radial, label);
    f.coeffs_ = std::move(coeffs);
    f.collar_ = collar_width;
    f.a1_width_ = collar_width;
    // Profile range on r in [0, 1.5] covers the unit disk and the unit square.
    f.base_min_ = std::numeric_limits<double>::infinity();
    f.base_max_ = 0.0;
    for (int i = 0; i <= 3000; ++i) {
      const double k = f.radial_base(1.5 * i / 3000.0);
      if (!(k > 0.0)) throw PreconditionError("radial profile is not elliptic (kappa <= 0)");
      f.base_min_ = std::min(f.base_min_, k);
      f.base_max_ = std::max(f.base_max_, k);
    }
    return f;
  }

  /// kappa(x) = 1 + h exp(1 / (|x - x0|^2 / w^2 - 1)) inside the ball |x - x0| < w.
  /// The A1 collar width is reported relative to the unit disk.
  static ConductivityField bump(Vec2 center, double width, double height) {
    if (!(width > 0.0)) throw PreconditionError("bump width must be positive");
    if (!(1.0 + height * std::exp(-1.0) > 0.0)) throw PreconditionError("bump conductivity is not elliptic");
    ConductivityField f(KappaFamily::Bump, "bump(" + format(center.x()) + "," + format(center.y()) + ";" +
                                                format(width) + ";" + format(height) + ")");
    f.center_ = center;
    f.width_ = width;
    f.height_ = height;
    f.a1_width_ = std::max(0.0, 1.0 - center.norm() - width);
    const double peak = 1.0 + height * std::exp(-1.0);
    f.base_min_ = std::min(1.0, peak);
    f.base_max_ = std::max(1.0, peak);
    return f;
  }

  /// Arbitrary symmetric matrix field; grad_div by central differences.
  static ConductivityField custom(MatrixFn fn, double ellipticity_c, bool isotropic, std::string label,
                                  double a1_width = 0.0) {
    ConductivityField f(KappaFamily::Custom, std::move(label));
    f.custom_ = std::move(fn);
    f.isotropic_ = isotropic;
    f.base_min_ = 1.0 / ellipticity_c;
    f.base_max_ = ellipticity_c;
    f.a1_width_ = a1_width;
    return f;
  }

  KappaFamily family() const { return family_; }
  const std::string& label() const { return label_; }
  bool isotropic() const { return isotropic_; }
  bool is_constant() const { return family_ == KappaFamily::Constant; }
  double scale() const { return scale_; }
  double multiplier() const { return multiplier_; }

  /// Ellipticity constant c >= 1 with c^-1 |xi|^2 <= xi.kappa xi <= c |xi|^2.
  double ellipticity_c() const {
    const double f = multiplier_ / (scale_ * scale_);
    return std::max({1.0, f * base_max_, 1.0 / (f * base_min_)});
  }

  /// Width of the boundary collar where kappa is the identity (0 if not claimed).
  double a1_width() const {
    if (multiplier_ / (scale_ * scale_) != 1.0) return 0.0;
    return a1_width_ / scale_;
  }

  Mat2 eval(const Vec2& x) const {
    const double f = multiplier_ / (scale_ * scale_);
    if (family_ == KappaFamily::Custom) return f * custom_(scale_ * x);
    return (f * base_scalar(scale_ * x)) * Mat2::Identity();
  }

  /// Scalar value for isotropic fields.
  double scalar(const Vec2& x) const {
    const double f = multiplier_ / (scale_ * scale_);
    if (family_ == KappaFamily::Custom) return f * custom_(scale_ * x)(0, 0);
    return f * base_scalar(scale_ * x);
  }

  /// sum_j d_j kappa_ij(x).
  Vec2 grad_div(const Vec2& x) const {
    const double f = multiplier_ / scale_;
    const Vec2 y = scale_ * x;
    switch (family_) {
      case KappaFamily::Constant: return Vec2::Zero();
      case KappaFamily::Radial: {
        const double r = y.norm();
        if (r == 0.0) return Vec2::Zero();
        return (f * radial_base_derivative(r) / r) * y;
      }
      case KappaFamily::Bump: {
        const Vec2 d = y - center_;
        const double q = d.squaredNorm() / (width_ * width_);
        if (q >= 1.0) return Vec2::Zero();
        const double g = std::exp(1.0 / (q - 1.0));
        return (f * height_ * g * (-1.0 / ((q - 1.0) * (q - 1.0))) * 2.0 / (width_ * width_)) * d;
      }
      case KappaFamily::Custom: {
        constexpr double h = 1e-5;
        const Mat2 kxp = custom_(y + Vec2(h, 0.0)), kxm = custom_(y - Vec2(h, 0.0));
        const Mat2 kyp = custom_(y + Vec2(0.0, h)), kym = custom_(y - Vec2(0.0, h));
        const Mat2 dx = (kxp - kxm) / (2.0 * h), dy = (kyp - kym) / (2.0 * h);
        return f * Vec2(dx(0, 0) + dy(0, 1), dx(1, 0) + dy(1, 1));
      }
    }
    return Vec2::Zero();
  }

  /// Radial profile kappa(r) when the field is rotation invariant about the origin.
  std::optional<std::function<double(double)>> radial_profile() const {
    if (family_ != KappaFamily::Constant && family_ != KappaFamily::Radial) return std::nullopt;
    ConductivityField copy = *this;
    return [copy](double r) { return copy.scalar(Vec2(r, 0.0)); };
  }

  bool rotation_invariant() const {
    return family_ == KappaFamily::Constant || family_ == KappaFamily::Radial;
  }

  ConductivityField scaled(double R) const {
    ConductivityField f = *this;
    f.scale_ *= R;
    f.label_ = label_ + "^R(" + format(R) + ")";
    return f;
  }

  ConductivityField multiplied(double c) const {
    if (!(c > 0.0)) throw PreconditionError("conductivity multiplier must be positive");
    ConductivityField f = *this;
    f.multiplier_ *= c;
    f.label_ = format(c) + "*" + label_;
    return f;
  }

private:
  ConductivityField(KappaFamily family, std::string label) : family_(family), label_(std::move(label)) {}

  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
  }

  double polynomial(double r) const {
    double v = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) v = v * r + *it;
    return v;
  }

  double polynomial_derivative(double r) const {
    double v = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 1;) v = v * r + static_cast<double>(k) * coeffs_[k];
    return v;
  }

  // Collar blend chi(r): 1 for r <= 1 - 2w, 0 for r >= 1 - w.
  double collar_weight(double r) const {
    return smooth_step(((1.0 - collar_) - r) / collar_);
  }

  double radial_base(double r) const {
    const double p = polynomial(r);
    if (collar_ <= 0.0) return p;
    return 1.0 + (p - 1.0) * collar_weight(r);
  }

  double radial_base_derivative(double r) const {
    const double dp = polynomial_derivative(r);
    if (collar_ <= 0.0) return dp;
    const double chi = collar_weight(r);
    const double dchi = -smooth_step_derivative(((1.0 - collar_) - r) / collar_) / collar_;
    return dp * chi + (polynomial(r) - 1.0) * dchi;
  }

  double base_scalar(const Vec2& y) const {
    switch (family_) {
      case KappaFamily::Constant: return value_;
      case KappaFamily::Radial: return radial_base(y.norm());
      case KappaFamily::Bump: {
        const double q = (y - center_).squaredNorm() / (width_ * width_);
        return q >= 1.0 ? 1.0 : 1.0 + height_ * std::exp(1.0 / (q - 1.0));
      }
      case KappaFamily::Custom: return custom_(y)(0, 0);
    }
    return 1.0;
  }

  KappaFamily family_;
  std::string label_;
  bool isotropic_ = true;
  double value_ = 1.0;
  std::vector<double> coeffs_;
  double collar_ = 0.0;
  Vec2 center_ = Vec2::Zero();
  double width_ = 1.0;
  double height_ = 0.0;
  MatrixFn custom_;
  double scale_ = 1.0;
  double multiplier_ = 1.0;
  double base_min_ = 1.0;
  double base_max_ = 1.0;
  double a1_width_ = 0.0;
};

/// Checked evaluation: x must lie in the closure of the domain.
inline Mat2 eval_kappa(const ConductivityField& field, const Domain& domain, const Vec2& x) {
  if (!domain.in_closure(x, 1e-9))
    throw DomainError("conductivity evaluated outside the closure of the domain");
  return field.eval(x);
}

/// kappa^R(x) = R^-2 kappa(R x) on the dilated domain R^-1 D.
inline ConductivityField scale_field(const ConductivityField& field, double R) {
  if (!(R > 0.0)) throw PreconditionError("scale factor must be positive");
  return field.scaled(R);
}

struct EllipticityReport {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double max_asymmetry = 0.0;
  double max_a1_violation = 0.0;  ///< max |kappa - I| inside the claimed collar
  bool ok = false;
};

/// Samples kappa on a grid over the domain and checks symmetry, the stored
/// ellipticity bounds and the A1 collar claim.
inline EllipticityReport check_field(const ConductivityField& field, const Domain& domain, int n = 101) {
  EllipticityReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  const bool square = domain.kind() == DomainKind::UnitSquare;
  const double lo = square ? 0.0 : -1.5;
  const double hi = square ? 1.0 : 1.5;
  const double a1 = field.a1_width();
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const Vec2 x(lo + (hi - lo) * i / n, lo + (hi - lo) * j / n);
      if (!domain.in_closure(x, 0.0)) continue;
      const Mat2 k = field.eval(x);
      rep.max_asymmetry = std::max(rep.max_asymmetry, std::abs(k(0, 1) - k(1, 0)));
      const Mat2 sym = 0.5 * (k + k.transpose());
      const double mean = 0.5 * sym.trace();
      const double rad = std::sqrt(0.25 * (sym(0, 0) - sym(1, 1)) * (sym(0, 0) - sym(1, 1)) + sym(0, 1) * sym(0, 1));
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, mean - rad);
      rep.max_eigenvalue = std::max(rep.max_eigenvalue, mean + rad);
      if (a1 > 0.0) {
        const Projection p = domain.project_unchecked(x);
        const double dist = p.inside ? (x - p.foot.cartesian).norm() : 0.0;
        if (dist < a1) rep.max_a1_violation = std::max(rep.max_a1_violation, (k - Mat2::Identity()).cwiseAbs().maxCoeff());
      }
    }
  }
  const double c = field.ellipticity_c();
  rep.ok = rep.max_asymmetry <= 1e-14 && rep.min_eigenvalue >= 1.0 / c * (1.0 - 1e-12) &&
           rep.max_eigenvalue <= c * (1.0 + 1e-12) && rep.max_a1_violation <= 1e-12;
  return rep;
}

}  // namespace bdlab
