#pragma once

// Boundary-to-boundary excursions of a reflected path, indexed by local time.

#include "bdlab/boundary.hpp"
#include "bdlab/core.hpp"
#include "bdlab/geometry.hpp"
#include "bdlab/simulate.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bdlab {

struct ExcursionRecord {
  BoundaryPoint start;
  BoundaryPoint end;
  double duration = 0.0;
  double local_time_stamp = 0.0;  ///< local time at which the excursion leaves the boundary
  std::optional<std::vector<Vec2>> segment;
};

/// Maximal interior stretches between consecutive boundary contacts, keeping
/// those lasting at least min_duration.
inline std::vector<ExcursionRecord> decompose_excursions(const ContactLog& log, double min_duration) {
  std::vector<ExcursionRecord> out;
  for (std::size_t j = 1; j < log.size(); ++j) {
    if (log.step[j] <= log.step[j - 1] + 1) continue;
    const double duration = log.t[j] - log.t[j - 1];
    if (duration < min_duration) continue;
    out.push_back({log.point[j - 1], log.point[j], duration, log.L[j - 1], std::nullopt});
  }
  return out;
}

inline std::vector<ExcursionRecord> decompose_excursions(const PathSample& path, const Domain& domain,
                                                         double min_duration, bool keep_segments = false) {
  const ContactLog log = contacts_of(path, domain);
  std::vector<ExcursionRecord> out = decompose_excursions(log, min_duration);
  if (keep_segments) {
    std::size_t e = 0;
    for (std::size_t j = 1; j < log.size() && e < out.size(); ++j) {
      if (log.step[j] <= log.step[j - 1] + 1) continue;
      if (log.t[j] - log.t[j - 1] < min_duration) continue;
      out[e++].segment.emplace(path.points.begin() + log.step[j - 1], path.points.begin() + log.step[j] + 1);
    }
  }
  return out;
}

/// Number of excursions with stamp in (0, s_max], start in start_arc and end in end_arc.
inline std::size_t excursion_counting_measure(std::span<const ExcursionRecord> excursions, double s_max,
                                              const Arc& start_arc, const Arc& end_arc, const Domain& domain) {
  std::size_t n = 0;
  for (const auto& e : excursions) {
    if (!(e.local_time_stamp > 0.0) || e.local_time_stamp > s_max) continue;
    if (domain.arc_contains(start_arc, e.start.theta) && domain.arc_contains(end_arc, e.end.theta)) ++n;
  }
  return n;
}

/// Integer counts over (local-time interval) x (start arc) x (end arc) cells.
class CountingMeasure {
public:
  CountingMeasure(double s_max, int n_s, int n_arcs, double period)
      : s_max_(s_max), n_s_(n_s), n_arcs_(n_arcs), period_(period),
        counts_(static_cast<std::size_t>(n_s) * n_arcs * n_arcs, 0) {}

  void add(const ExcursionRecord& e) {
    if (!(e.local_time_stamp > 0.0) || e.local_time_stamp > s_max_) return;
    const int is = std::min(n_s_ - 1, static_cast<int>(e.local_time_stamp / s_max_ * n_s_));
    counts_[index(is, arc_of(e.start.theta), arc_of(e.end.theta))] += 1;
  }

  void merge(const CountingMeasure& o) {
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
  }

  std::uint64_t cell(int is, int ia, int ib) const { return counts_[index(is, ia, ib)]; }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }

  int n_s() const { return n_s_; }
  int n_arcs() const { return n_arcs_; }

private:
  int arc_of(double theta) const {
    double u = std::fmod(theta, period_);
    if (u < 0.0) u += period_;
    return std::min(n_arcs_ - 1, static_cast<int>(u / period_ * n_arcs_));
  }
  std::size_t index(int is, int ia, int ib) const {
    return (static_cast<std::size_t>(is) * n_arcs_ + ia) * n_arcs_ + ib;
  }

  double s_max_;
  int n_s_;
  int n_arcs_;
  double period_;
  std::vector<std::uint64_t> counts_;
};

struct JumpExcursionMatch {
  std::size_t jumps = 0;
  std::size_t excursions = 0;
  std::size_t matched = 0;
  bool bijective() const { return jumps == matched && excursions == matched; }
};

/// Pairs jumps of size >= min_angle with excursions whose endpoints are at
/// least min_angle apart, by local-time stamp and endpoints.
inline JumpExcursionMatch match_jumps_to_excursions(std::span<const JumpEvent> jumps,
                                                    std::span<const ExcursionRecord> excursions, double min_angle,
                                                    const Domain& domain) {
  JumpExcursionMatch m;
  std::vector<const ExcursionRecord*> big;
  for (const auto& e : excursions)
    if (domain.separation(e.start.theta, e.end.theta) >= min_angle) big.push_back(&e);
  m.excursions = big.size();
  m.jumps = jumps.size();
  std::size_t k = 0;
  for (const auto& j : jumps) {
    while (k < big.size() && big[k]->local_time_stamp < j.s) ++k;
    if (k < big.size() && big[k]->local_time_stamp == j.s && big[k]->start.theta == j.from.theta &&
        big[k]->end.theta == j.to.theta && big[k]->duration == j.gap) {
      ++m.matched;
      ++k;
    }
  }
  return m;
}

}  // namespace bdlab
