#pragma once

// The boundary process: the reflected path watched on the clock of its
// boundary local time. On a discrete record L is a right-continuous step
// function, so its right-continuous right-inverse is
//   tau(s) = inf{ t_i : L_i > s },
// i.e. the first record time at which L exceeds s. The trace value at s is
// the path position at tau(s), which is always a boundary contact.

#include "bdlab/core.hpp"
#include "bdlab/geometry.hpp"
#include "bdlab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace bdlab {

/// Record index realizing tau(s) on a nondecreasing local-time array.
inline std::size_t tau_index(std::span<const double> L, double s) {
  if (L.empty()) throw OutOfRangeError("empty local-time record");
  if (s < 0.0 || s > L.back()) throw OutOfRangeError("local time level outside [0, L_final]");
  const auto it = std::upper_bound(L.begin(), L.end(), s);
  if (it != L.end()) return static_cast<std::size_t>(it - L.begin());
  // s == L_final: the record ends; use the instant L reached its final value.
  return static_cast<std::size_t>(std::lower_bound(L.begin(), L.end(), s) - L.begin());
}

inline double local_time_inverse(const PathSample& path, double s) {
  return path.times[tau_index(path.local_time, s)];
}

/// Largest violation of L(tau(s)) >= s and L(tau(s)-) <= s over n_levels
/// equally spaced levels in [0, L_final); zero on any valid record.
inline double right_inverse_defect(const PathSample& path, int n_levels) {
  double worst = 0.0;
  const double top = path.final_local_time();
  for (int j = 0; j < n_levels; ++j) {
    const double s = top * j / n_levels;
    const std::size_t k = tau_index(path.local_time, s);
    worst = std::max(worst, s - path.local_time[k]);
    if (k > 0) worst = std::max(worst, path.local_time[k - 1] - s);
  }
  return worst;
}

/// Time-changed boundary process sampled on a local-time grid.
struct BoundaryTrace {
  std::vector<double> s_values;
  std::vector<BoundaryPoint> xi_values;
  std::vector<double> source_tau;

  std::size_t size() const { return s_values.size(); }
  bool empty() const { return s_values.empty(); }
  double s_begin() const { return s_values.front(); }

  /// Right-continuous step interpolation: the trace value at local time s.
  const BoundaryPoint& at(double s) const {
    auto it = std::upper_bound(s_values.begin(), s_values.end(), s);
    if (it == s_values.begin()) throw OutOfRangeError("trace queried before its first sample");
    return xi_values[static_cast<std::size_t>(it - s_values.begin()) - 1];
  }

  void push_back(double s, const BoundaryPoint& xi, double tau) {
    s_values.push_back(s);
    xi_values.push_back(xi);
    source_tau.push_back(tau);
  }
};

/// Uniform grid with spacing equal to the median positive per-contact dL.
inline std::vector<double> default_s_grid(const PathSample& path) {
  std::vector<double> dl;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double d = path.local_time[i] - path.local_time[i - 1];
    if (d > 0.0) dl.push_back(d);
  }
  if (dl.empty()) return {0.0};
  std::nth_element(dl.begin(), dl.begin() + dl.size() / 2, dl.end());
  const double h = dl[dl.size() / 2];
  std::vector<double> grid;
  const double top = path.final_local_time();
  for (std::size_t k = 0; k * h <= top; ++k) grid.push_back(k * h);
  return grid;
}

inline BoundaryTrace boundary_trace(const PathSample& path, std::span<const double> s_grid, const Domain& domain) {
  BoundaryTrace trace;
  trace.s_values.reserve(s_grid.size());
  for (std::size_t j = 0; j < s_grid.size(); ++j) {
    if (j > 0 && !(s_grid[j] > s_grid[j - 1])) throw PreconditionError("s_grid must be strictly increasing");
    const std::size_t k = tau_index(path.local_time, s_grid[j]);
    trace.push_back(s_grid[j], domain.project_unchecked(path.points[k]).foot, path.times[k]);
  }
  return trace;
}

/// Trace sampled at every local-time increment: one sample per contact with
/// dL > 0, at the level s = L before the contact, so tau(s) is that contact.
inline BoundaryTrace native_trace(const ContactLog& log) {
  BoundaryTrace trace;
  double level = 0.0;
  for (std::size_t j = 0; j < log.size(); ++j) {
    if (!(log.dL[j] > 0.0)) continue;
    trace.push_back(level, log.point[j], log.t[j]);
    level = log.L[j];
  }
  return trace;
}

inline BoundaryTrace native_trace(const PathSample& path, const Domain& domain) {
  return native_trace(contacts_of(path, domain));
}

struct JumpEvent {
  double s = 0.0;  ///< local-time stamp of the jump
  BoundaryPoint from;
  BoundaryPoint to;
  double gap = 0.0;  ///< tau(s) - tau(s-), the duration of the excursion behind the jump
};

/// Consecutive-sample jumps whose parameter separation is at least min_angle.
inline std::vector<JumpEvent> jump_events(const BoundaryTrace& trace, double min_angle, const Domain& domain) {
  if (!(min_angle > 0.0)) throw PreconditionError("min_angle must be positive");
  std::vector<JumpEvent> jumps;
  for (std::size_t j = 1; j < trace.size(); ++j) {
    const auto& a = trace.xi_values[j - 1];
    const auto& b = trace.xi_values[j];
    if (domain.separation(a.theta, b.theta) < min_angle) continue;
    jumps.push_back({trace.s_values[j], a, b, trace.source_tau[j] - trace.source_tau[j - 1]});
  }
  return jumps;
}

struct ChangeOfVariables {
  double lhs = 0.0;  ///< sum of f(t_k) over the part of each dL_k between levels a and b
  double rhs = 0.0;  ///< integral over s in [a, b] of f(tau(s))
};

/// Both sides of  int_{tau(a)}^{tau(b)} f dL = int_a^b f(tau(s)) ds  on a record.
inline ChangeOfVariables change_of_variables_check(const PathSample& path, const std::function<double(double)>& f,
                                                   double a, double b) {
  if (a > b) throw PreconditionError("change_of_variables_check: a > b");
  if (a < 0.0 || b > path.final_local_time()) throw OutOfRangeError("levels outside [0, L_final]");
  ChangeOfVariables out;
  const auto& L = path.local_time;
  // Stieltjes sum over the record.
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double lo = std::max(L[k - 1], a), hi = std::min(L[k], b);
    if (hi > lo) out.lhs += f(path.times[k]) * (hi - lo);
  }
  // Quadrature in s on the partition induced by the local-time levels.
  std::vector<double> levels{a};
  for (double l : L)
    if (l > a && l < b) levels.push_back(l);
  levels.push_back(b);
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    const double width = levels[i + 1] - levels[i];
    if (width > 0.0) out.rhs += f(local_time_inverse(path, levels[i])) * width;
  }
  return out;
}

struct ScalingReport {
  double R = 1.0;
  double max_local_time_error = 0.0;  ///< max |L^R_t - R L_t|
  double max_tau_error = 0.0;         ///< max |tau^R(s) - tau(s / R)|
  double max_trace_error = 0.0;       ///< max |Xhat^R_s - Xhat_{s/R} / R|
  std::size_t n_levels = 0;
  bool exact() const { return max_local_time_error == 0.0 && max_tau_error == 0.0 && max_trace_error <= 1e-15; }
};

/// Builds the rescaled record (X / R, R L) and checks the local-time,
/// inverse-local-time and boundary-trace scaling laws on it.
inline ScalingReport scaling_check(const PathSample& path, double R) {
  if (!(R > 0.0)) throw PreconditionError("scaling_check: R must be positive");
  PathSample scaled = path;
  for (auto& p : scaled.points) p /= R;
  for (auto& l : scaled.local_time) l *= R;

  ScalingReport rep;
  rep.R = R;
  rep.max_local_time_error = std::abs(scaled.final_local_time() - R * path.final_local_time());
  for (std::size_t i = 0; i < path.size(); ++i)
    rep.max_local_time_error = std::max(rep.max_local_time_error, std::abs(scaled.local_time[i] - R * path.local_time[i]));

  // Probe levels at midpoints between distinct local-time values, away from ties.
  std::vector<double> levels;
  for (std::size_t i = 1; i < path.size(); ++i)
    if (path.local_time[i] > path.local_time[i - 1]) levels.push_back(0.5 * (path.local_time[i] + path.local_time[i - 1]));
  for (double s : levels) {
    const double t = R * s;
    const std::size_t kr = tau_index(scaled.local_time, t);
    const std::size_t k = tau_index(path.local_time, t / R);
    rep.max_tau_error = std::max(rep.max_tau_error, std::abs(scaled.times[kr] - path.times[k]));
    rep.max_trace_error = std::max(rep.max_trace_error, (scaled.points[kr] - path.points[k] / R).norm());
  }
  rep.n_levels = levels.size();
  return rep;
}

}  // namespace bdlab
