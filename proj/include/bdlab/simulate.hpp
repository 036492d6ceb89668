#pragma once

// Euler-Maruyama simulation of the reflecting (and absorbed) diffusion with
// generator div(kappa grad) on a planar domain. A proposal that leaves the
// domain is pulled back along the conormal kappa*nu onto the boundary and the
// boundary local time grows by dL = c_cal * depth. With c_cal left unset the
// conormal normalization dL = depth / (nu . kappa nu) is used, which puts the
// Revuz measure of L at the surface measure.

#include "bdlab/conductivity.hpp"
#include "bdlab/core.hpp"
#include "bdlab/geometry.hpp"
#include "bdlab/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace bdlab {

struct SimParams {
  double dt = 1e-4;
  /// Local-time multiplier; NaN selects the conormal normalization 1 / (nu . kappa nu).
  double c_cal = std::numeric_limits<double>::quiet_NaN();
  int max_halvings = 10;

  bool auto_calibration() const { return std::isnan(c_cal); }
};

/// One accepted step of a reflected path.
struct StepRecord {
  double t = 0.0;  ///< clock after the step
  Vec2 x = Vec2::Zero();
  double L = 0.0;  ///< local time after the step
  double dL = 0.0;
  bool contact = false;
  double dt = 0.0;
  Vec2 drift_dt = Vec2::Zero();  ///< b(x) dt
  Vec2 noise = Vec2::Zero();     ///< B(x) dW
  BoundaryPoint foot;            ///< valid when contact
};

/// Outcome of resolving a proposal against the boundary.
struct Reflection {
  Vec2 x = Vec2::Zero();
  double dL = 0.0;
  double depth = 0.0;
  bool contact = false;
  bool rejected = false;  ///< overshoot beyond the projection reach
  BoundaryPoint foot;
};

/// Pulls an outside proposal back onto the boundary and books the local time.
inline Reflection reflect_proposal(const Vec2& y, const ConductivityField& field, const Domain& domain,
                                   const SimParams& params) {
  Reflection r;
  const Projection p = domain.project_unchecked(y);
  if (p.inside) {
    r.x = y;
    return r;
  }
  if (p.depth > domain.reach()) {
    r.rejected = true;
    return r;
  }
  r.contact = true;
  r.depth = p.depth;
  r.foot = p.foot;
  r.x = p.foot.cartesian;
  if (p.depth == 0.0) return r;
  const Mat2 k = field.eval(p.foot.cartesian);
  const Vec2 conormal = k * p.normal;
  const double normal_part = p.normal.dot(conormal);
  const double pull = p.depth / normal_part;
  r.dL = params.auto_calibration() ? pull : params.c_cal * p.depth;
  if (!field.isotropic()) {
    const Projection q = domain.project_unchecked(y - pull * conormal);
    r.foot = q.foot;
    r.x = q.foot.cartesian;
  }
  return r;
}

/// Per-path stepping engine over an immutable (field, domain) pair.
class ReflectedStepper {
public:
  ReflectedStepper(const ConductivityField& field, const Domain& domain, SimParams params)
      : field_(field), domain_(domain), params_(params) {
    if (field_.is_constant()) {
      const double a = field_.scalar(Vec2::Zero());
      const_sigma_ = std::sqrt(2.0 * a);
    }
  }

  const ConductivityField& field() const { return field_; }
  const Domain& domain() const { return domain_; }
  const SimParams& params() const { return params_; }

  /// One reflected step of nominal size dt (halved on reach violations).
  StepRecord step(const Vec2& x, double dt, RngStream& rng) const {
    StepRecord rec;
    rec.x = x;
    if (dt <= 0.0) return rec;
    double h = dt;
    for (int attempt = 0; attempt <= params_.max_halvings; ++attempt, h *= 0.5) {
      propose(x, h, rng, rec);
      const Vec2 y = x + rec.drift_dt + rec.noise;
      if (domain_.contains(y)) {
        rec.x = y;
        rec.dt = h;
        return rec;
      }
      const Reflection r = reflect_proposal(y, field_, domain_, params_);
      if (r.rejected) continue;
      rec.x = r.x;
      rec.dL = r.dL;
      rec.contact = r.contact;
      rec.foot = r.foot;
      rec.dt = h;
      return rec;
    }
    throw SimulationError("step rejected after " + std::to_string(params_.max_halvings) +
                          " halvings of dt; overshoot beyond projection reach");
  }

  struct AbsorbedStep {
    Vec2 x = Vec2::Zero();
    double dt = 0.0;
    bool exited = false;
    BoundaryPoint exit_point;
  };

  AbsorbedStep step_absorbed(const Vec2& x, double dt, RngStream& rng) const {
    AbsorbedStep out;
    StepRecord rec;
    double h = dt;
    for (int attempt = 0; attempt <= params_.max_halvings; ++attempt, h *= 0.5) {
      propose(x, h, rng, rec);
      const Vec2 y = x + rec.drift_dt + rec.noise;
      out.dt = h;
      if (domain_.contains(y)) {
        out.x = y;
        return out;
      }
      const Projection p = domain_.project_unchecked(y);
      if (p.depth > domain_.reach()) continue;
      out.exited = true;
      out.exit_point = p.foot;
      out.x = p.foot.cartesian;
      return out;
    }
    throw SimulationError("absorbed step rejected after repeated halving of dt");
  }

private:
  void propose(const Vec2& x, double h, RngStream& rng, StepRecord& rec) const {
    const double z1 = rng.normal(), z2 = rng.normal();
    const double sq = std::sqrt(h);
    if (const_sigma_ > 0.0) {
      rec.drift_dt.setZero();
      rec.noise = Vec2(const_sigma_ * sq * z1, const_sigma_ * sq * z2);
      return;
    }
    rec.drift_dt = field_.grad_div(x) * h;
    if (field_.isotropic()) {
      const double s = std::sqrt(2.0 * field_.scalar(x)) * sq;
      rec.noise = Vec2(s * z1, s * z2);
    } else {
      rec.noise = sqrt_spd(2.0 * field_.eval(x)) * Vec2(z1, z2) * sq;
    }
  }

  const ConductivityField& field_;
  const Domain& domain_;
  SimParams params_;
  double const_sigma_ = 0.0;
};

/// Single reflected step: x' and the local-time increment.
inline StepRecord step_reflected(const Vec2& x, double dt, const ConductivityField& field, const Domain& domain,
                                 RngStream& rng, const SimParams& params = {}) {
  return ReflectedStepper(field, domain, params).step(x, dt, rng);
}

/// Drives the reflected chain from x0 until stop(t, L, steps) holds, feeding
/// every accepted step to the observer.
template <class Observer, class Stop>
void run_reflected(const Vec2& x0, const ReflectedStepper& stepper, RngStream& rng, Observer& observer,
                   Stop&& stop) {
  double t = 0.0, L = 0.0;
  Vec2 x = x0;
  std::int64_t steps = 0;
  observer.start(x0);
  const double dt = stepper.params().dt;
  while (!stop(t, L, steps)) {
    StepRecord rec = stepper.step(x, dt, rng);
    t += rec.dt;
    L += rec.dL;
    rec.t = t;
    rec.L = L;
    x = rec.x;
    ++steps;
    observer.step(rec);
  }
}

/// Discretized reflected trajectory.
struct PathSample {
  std::vector<double> times;
  std::vector<Vec2> points;
  std::vector<double> local_time;
  std::vector<std::uint8_t> boundary_flags;

  std::size_t size() const { return times.size(); }
  double final_local_time() const { return local_time.empty() ? 0.0 : local_time.back(); }
  double final_time() const { return times.empty() ? 0.0 : times.back(); }

  void start(const Vec2& x0) {
    times.assign(1, 0.0);
    points.assign(1, x0);
    local_time.assign(1, 0.0);
    boundary_flags.assign(1, 0);
  }
  void step(const StepRecord& r) {
    times.push_back(r.t);
    points.push_back(r.x);
    local_time.push_back(r.L);
    boundary_flags.push_back(r.contact ? 1 : 0);
  }
};

/// Boundary-contact subsequence of a path: enough to rebuild the time-changed
/// trace and the excursions without storing interior points.
struct ContactLog {
  std::vector<std::int64_t> step;  ///< index of the contact in the full record
  std::vector<double> t;
  std::vector<BoundaryPoint> point;
  std::vector<double> L;  ///< local time after the contact
  std::vector<double> dL;
  double final_time = 0.0;
  double final_local_time = 0.0;
  std::int64_t n_steps = 0;

  std::size_t size() const { return t.size(); }

  void start(const Vec2&) {
    step.clear();
    t.clear();
    point.clear();
    L.clear();
    dL.clear();
    final_time = final_local_time = 0.0;
    n_steps = 0;
  }
  void step_record(const StepRecord& r) {
    ++n_steps;
    final_time = r.t;
    final_local_time = r.L;
    if (!r.contact) return;
    step.push_back(n_steps);
    t.push_back(r.t);
    point.push_back(r.foot);
    L.push_back(r.L);
    dL.push_back(r.dL);
  }
};

/// Observer adapter so a ContactLog can be filled by run_reflected.
struct ContactRecorder {
  ContactLog& log;
  void start(const Vec2& x0) { log.start(x0); }
  void step(const StepRecord& r) { log.step_record(r); }
};

/// Extracts the contact log from a full path record.
inline ContactLog contacts_of(const PathSample& path, const Domain& domain) {
  ContactLog log;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (!path.boundary_flags[i]) continue;
    log.step.push_back(static_cast<std::int64_t>(i));
    log.t.push_back(path.times[i]);
    log.point.push_back(domain.project_unchecked(path.points[i]).foot);
    log.L.push_back(path.local_time[i]);
    log.dL.push_back(path.local_time[i] - path.local_time[i - 1]);
  }
  log.final_time = path.final_time();
  log.final_local_time = path.final_local_time();
  log.n_steps = static_cast<std::int64_t>(path.size()) - 1;
  return log;
}

/// Reflected path on [0, T]; the final clock value is >= T.
inline PathSample sample_path(const Vec2& x0, double horizon, const ConductivityField& field, const Domain& domain,
                              RngStream& rng, const SimParams& params) {
  if (!domain.in_closure(x0, 1e-12)) throw DomainError("sample_path: start point outside the closed domain");
  if (horizon < 0.0) throw PreconditionError("sample_path: negative horizon");
  ReflectedStepper stepper(field, domain, params);
  PathSample path;
  run_reflected(x0, stepper, rng, path, [horizon](double t, double, std::int64_t) { return t >= horizon; });
  return path;
}

struct AbsorbedResult {
  double exit_time = 0.0;
  BoundaryPoint exit_point;
  std::optional<PathSample> path;
};

/// Path killed at the first boundary contact.
inline AbsorbedResult sample_absorbed(const Vec2& x0, const ConductivityField& field, const Domain& domain,
                                      RngStream& rng, const SimParams& params, bool record_path = false) {
  if (!domain.contains(x0)) throw PreconditionError("sample_absorbed: start point must be interior");
  ReflectedStepper stepper(field, domain, params);
  AbsorbedResult res;
  if (record_path) res.path.emplace().start(x0);
  Vec2 x = x0;
  double t = 0.0;
  for (;;) {
    const auto s = stepper.step_absorbed(x, params.dt, rng);
    t += s.dt;
    x = s.x;
    if (record_path) {
      StepRecord r;
      r.t = t;
      r.x = x;
      r.contact = s.exited;
      res.path->step(r);
    }
    if (s.exited) {
      res.exit_time = t;
      res.exit_point = s.exit_point;
      return res;
    }
  }
}

}  // namespace bdlab
