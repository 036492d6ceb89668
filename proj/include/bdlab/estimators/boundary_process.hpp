#pragma once

// Statistics of the time-changed boundary process Xhat_s = X at tau(s) on the
// unit disk, started from the uniform (stationary) law on the circle. One pass
// over each path feeds every estimator: jump kernel, Levy-system counts,
// excursion counts with the jump/excursion matching, the characteristic
// function decay behind spectral_decay, and the generator probe.

#include "bdlab/boundary.hpp"
#include "bdlab/estimators/common.hpp"
#include "bdlab/excursions.hpp"
#include "bdlab/reference/dtn.hpp"
#include "bdlab/reference/kernels.hpp"
#include "bdlab/simulate.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <complex>
#include <optional>
#include <vector>

namespace bdlab {

struct BoundaryRunConfig {
  double s_max = 100.0;  ///< local-time budget per path
  double min_angle = 0.05;
  int kernel_bins = 16;  ///< bins of the separation over (0, pi]
  Arc arc_a{-kPi / 8, kPi / 8};
  Arc arc_b{7 * kPi / 8, 9 * kPi / 8};
  std::vector<int> modes{1, 2, 3};
  double spectral_t_max = 1.0;  ///< mode n uses lags up to spectral_t_max / n
  int spectral_points = 10;
  double grid_ds = 0.005;  ///< s-grid spacing for the sampled trace
  int batches = 20;        ///< path batches for spectral standard errors
  FourierSeries probe_phi = FourierSeries::cosine(1);
  double probe_t = 0.02;
  int probe_bins = 16;
  std::size_t keep_paths = 0;   ///< paths whose jumps and excursions are kept for output
  std::size_t keep_trace = 0;   ///< trace samples kept per kept path
};

/// One kept jump, excursion or trace sample for the CSV artifacts.
struct KeptJump {
  std::size_t path_id;
  JumpEvent jump;
};
struct KeptExcursion {
  std::size_t path_id;
  ExcursionRecord excursion;
};
struct KeptTraceSample {
  std::size_t path_id;
  double s, theta;
};

struct BoundaryStats {
  std::size_t n_paths = 0;
  double s_total = 0.0;
  double t_total = 0.0;
  std::int64_t steps = 0;
  std::vector<std::uint64_t> kernel_counts;
  RunningStats levy_rate;  ///< per-path A->B jump rate per unit local time
  std::uint64_t levy_count = 0;
  std::uint64_t excursion_count_ab = 0;
  RunningStats excursion_rate;
  std::uint64_t n_jumps = 0, n_excursions = 0, n_matched = 0;
  std::uint64_t n_excursions_all = 0;
  // Characteristic function sums per (mode, lag) and batch.
  std::vector<std::vector<double>> cf_sum;     ///< [batch][mode * lags + lag]
  std::vector<std::vector<double>> cf_count;
  std::vector<RunningStats> probe;  ///< per theta bin
  std::vector<KeptJump> kept_jumps;
  std::vector<KeptExcursion> kept_excursions;
  std::vector<KeptTraceSample> kept_trace;

  void merge(BoundaryStats&& o) {
    n_paths += o.n_paths;
    s_total += o.s_total;
    t_total += o.t_total;
    steps += o.steps;
    for (std::size_t k = 0; k < kernel_counts.size(); ++k) kernel_counts[k] += o.kernel_counts[k];
    levy_rate.merge(o.levy_rate);
    levy_count += o.levy_count;
    excursion_count_ab += o.excursion_count_ab;
    excursion_rate.merge(o.excursion_rate);
    n_jumps += o.n_jumps;
    n_excursions += o.n_excursions;
    n_matched += o.n_matched;
    n_excursions_all += o.n_excursions_all;
    for (std::size_t b = 0; b < cf_sum.size(); ++b)
      for (std::size_t k = 0; k < cf_sum[b].size(); ++k) {
        cf_sum[b][k] += o.cf_sum[b][k];
        cf_count[b][k] += o.cf_count[b][k];
      }
    for (std::size_t k = 0; k < probe.size(); ++k) probe[k].merge(o.probe[k]);
    kept_jumps.insert(kept_jumps.end(), o.kept_jumps.begin(), o.kept_jumps.end());
    kept_excursions.insert(kept_excursions.end(), o.kept_excursions.begin(), o.kept_excursions.end());
    kept_trace.insert(kept_trace.end(), o.kept_trace.begin(), o.kept_trace.end());
  }
};

/// Result of a boundary-process run with the configuration that produced it.
struct BoundaryRun {
  BoundaryRunConfig config;
  BoundaryStats stats;
  std::vector<int> lag_steps;  ///< lags in grid steps, per mode: lag_steps[mode_index * points + k]
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::string kappa_label;
};

namespace detail {

inline std::vector<int> spectral_lags(const BoundaryRunConfig& c) {
  std::vector<int> lags;
  for (int n : c.modes) {
    for (int k = 1; k <= c.spectral_points; ++k) {
      const double t = c.spectral_t_max / n * k / c.spectral_points;
      lags.push_back(std::max(1, static_cast<int>(std::lround(t / c.grid_ds))));
    }
  }
  return lags;
}

inline int angle_bin(double theta, int n_bins) {
  const double u = wrap_angle(theta) / kTwoPi * n_bins;
  return std::min(n_bins - 1, static_cast<int>(u));
}

}  // namespace detail

/// Simulates n_paths boundary-started paths on the unit disk, each until its
/// local time reaches config.s_max, and accumulates every boundary statistic.
inline BoundaryRun run_boundary_process(const ConductivityField& field, std::size_t n_paths,
                                        const BoundaryRunConfig& cfg, const SimParams& params,
                                        const RunSettings& run) {
  const Domain disk = Domain::unit_disk();
  if (!field.rotation_invariant())
    throw PreconditionError("boundary-process estimators need a rotation-invariant conductivity");
  if (!(cfg.min_angle > 0.0)) throw PreconditionError("min_angle must be positive");
  if (arcs_overlap(disk, cfg.arc_a, cfg.arc_b)) throw PreconditionError("Levy arcs A and B must be disjoint");
  if (disk.separation(0.5 * (cfg.arc_a.lo + cfg.arc_a.hi), 0.5 * (cfg.arc_b.lo + cfg.arc_b.hi)) -
          0.5 * ((cfg.arc_a.hi - cfg.arc_a.lo) + (cfg.arc_b.hi - cfg.arc_b.lo)) <
      cfg.min_angle)
    throw PreconditionError("Levy arcs must be at least min_angle apart");

  BoundaryRun out;
  out.config = cfg;
  out.lag_steps = detail::spectral_lags(cfg);
  out.dt = params.dt;
  out.seed = run.seed;
  out.kappa_label = field.label();
  const int n_modes = static_cast<int>(cfg.modes.size());
  const int n_lags = static_cast<int>(out.lag_steps.size());
  const int probe_q = std::max(1, static_cast<int>(std::lround(cfg.probe_t / cfg.grid_ds)));
  const double probe_t = probe_q * cfg.grid_ds;
  ReflectedStepper stepper(field, disk, params);

  auto make = [&] {
    BoundaryStats s;
    s.kernel_counts.assign(static_cast<std::size_t>(cfg.kernel_bins), 0);
    s.cf_sum.assign(static_cast<std::size_t>(cfg.batches), std::vector<double>(n_lags, 0.0));
    s.cf_count.assign(static_cast<std::size_t>(cfg.batches), std::vector<double>(n_lags, 0.0));
    s.probe.assign(static_cast<std::size_t>(cfg.probe_bins), RunningStats{});
    return s;
  };

  auto process = [&](std::size_t i, BoundaryStats& acc) {
    RngStream rng(run.seed, run.stream_offset + i);
    const Vec2 x0 = disk.sample_boundary(rng).cartesian;
    ContactLog log;
    ContactRecorder rec{log};
    const double s_max = cfg.s_max;
    run_reflected(x0, stepper, rng, rec, [s_max](double, double L, std::int64_t) { return L >= s_max; });
    acc.n_paths += 1;
    acc.s_total += s_max;
    acc.t_total += log.final_time;
    acc.steps += log.n_steps;

    const BoundaryTrace trace = native_trace(log);
    const auto jumps = jump_events(trace, cfg.min_angle, disk);
    const double w = kPi / cfg.kernel_bins;
    std::uint64_t ab = 0;
    for (const auto& j : jumps) {
      if (!(j.s > 0.0) || j.s > s_max) continue;
      const double d = disk.separation(j.from.theta, j.to.theta);
      acc.kernel_counts[static_cast<std::size_t>(std::min(cfg.kernel_bins - 1, static_cast<int>(d / w)))] += 1;
      if (disk.arc_contains(cfg.arc_a, j.from.theta) && disk.arc_contains(cfg.arc_b, j.to.theta)) ++ab;
    }
    acc.levy_count += ab;
    acc.levy_rate.add(static_cast<double>(ab) / s_max);

    const auto excursions = decompose_excursions(log, 0.0);
    acc.n_excursions_all += excursions.size();
    const auto ex_ab = excursion_counting_measure(excursions, s_max, cfg.arc_a, cfg.arc_b, disk);
    acc.excursion_count_ab += ex_ab;
    acc.excursion_rate.add(static_cast<double>(ex_ab) / s_max);
    const auto match = match_jumps_to_excursions(jumps, excursions, cfg.min_angle, disk);
    acc.n_jumps += match.jumps;
    acc.n_excursions += match.excursions;
    acc.n_matched += match.matched;

    if (i < cfg.keep_paths) {
      for (const auto& j : jumps) acc.kept_jumps.push_back({i, j});
      for (const auto& e : excursions)
        if (disk.separation(e.start.theta, e.end.theta) >= cfg.min_angle) acc.kept_excursions.push_back({i, e});
      const std::size_t stride = std::max<std::size_t>(1, trace.size() / std::max<std::size_t>(1, cfg.keep_trace));
      for (std::size_t k = 0; k < trace.size(); k += stride)
        acc.kept_trace.push_back({i, trace.s_values[k], trace.xi_values[k].theta});
    }

    // Trace sampled on the uniform grid s_k = k ds (right-continuous lookup).
    const std::size_t n_grid = static_cast<std::size_t>(s_max / cfg.grid_ds) + 1;
    std::vector<double> theta(n_grid);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < n_grid; ++k) {
      const double s = k * cfg.grid_ds;
      while (pos + 1 < trace.size() && trace.s_values[pos + 1] <= s) ++pos;
      theta[k] = trace.xi_values[pos].theta;
    }
    auto& sums = acc.cf_sum[i % static_cast<std::size_t>(cfg.batches)];
    auto& counts = acc.cf_count[i % static_cast<std::size_t>(cfg.batches)];
    std::vector<std::complex<double>> e(n_grid);
    for (int m = 0; m < n_modes; ++m) {
      const int n = cfg.modes[m];
      for (std::size_t k = 0; k < n_grid; ++k) e[k] = std::polar(1.0, n * theta[k]);
      for (int l = 0; l < cfg.spectral_points; ++l) {
        const int idx = m * cfg.spectral_points + l;
        const std::size_t lag = static_cast<std::size_t>(out.lag_steps[idx]);
        double sum = 0.0;
        for (std::size_t k = 0; k + lag < n_grid; ++k) sum += (e[k + lag] * std::conj(e[k])).real();
        sums[idx] += sum;
        counts[idx] += static_cast<double>(n_grid > lag ? n_grid - lag : 0);
      }
    }
    // Generator probe on non-overlapping windows of length probe_t.
    for (std::size_t k = 0; k + probe_q < n_grid; k += probe_q) {
      const double v = (cfg.probe_phi(theta[k + probe_q]) - cfg.probe_phi(theta[k])) / probe_t;
      acc.probe[static_cast<std::size_t>(detail::angle_bin(theta[k], cfg.probe_bins))].add(v);
    }
  };

  out.stats = parallel_reduce<BoundaryStats>(n_paths, run.parallel(), make, process,
                                             [](BoundaryStats& a, BoundaryStats&& b) { a.merge(std::move(b)); });
  return out;
}

// ---------------------------------------------------------------- jump kernel

struct KernelEstimate {
  std::vector<double> bin_lo, bin_hi;
  std::vector<double> density, std_error;
  std::vector<std::uint64_t> counts;
  std::vector<bool> low_confidence;  ///< fewer than 25 jumps
  std::vector<bool> resolved;        ///< bin lies entirely above min_angle
  double min_angle = 0.0;
  double local_time_budget = 0.0;

  std::size_t size() const { return density.size(); }
  double mid(std::size_t k) const { return 0.5 * (bin_lo[k] + bin_hi[k]); }
};

/// Jump-kernel density per unit local time and per unit arc length of the
/// target, folded over the sign of the separation. Under the stationary start
/// the jumps out of the current position with |Delta| in a bin of width w
/// occur at rate 2 N w per unit local time.
inline KernelEstimate estimate_jump_kernel(const BoundaryRun& run) {
  const auto& c = run.config;
  KernelEstimate k;
  k.min_angle = c.min_angle;
  k.local_time_budget = run.stats.s_total;
  const double w = kPi / c.kernel_bins;
  const double exposure = run.stats.s_total * 2.0 * w;
  for (int b = 0; b < c.kernel_bins; ++b) {
    const auto n = run.stats.kernel_counts[static_cast<std::size_t>(b)];
    k.bin_lo.push_back(b * w);
    k.bin_hi.push_back((b + 1) * w);
    k.counts.push_back(n);
    k.density.push_back(exposure > 0 ? static_cast<double>(n) / exposure : 0.0);
    k.std_error.push_back(exposure > 0 ? std::sqrt(static_cast<double>(n)) / exposure : 0.0);
    k.low_confidence.push_back(n < 25);
    k.resolved.push_back(b * w >= c.min_angle);
  }
  return k;
}

/// Reference kernel averaged over the bins of an estimate.
inline KernelEstimate reference_kernel(const LevyKernelModel& model, const KernelEstimate& like) {
  KernelEstimate k = like;
  for (std::size_t b = 0; b < k.size(); ++b) {
    k.density[b] = k.bin_lo[b] >= like.min_angle ? levy_bin_average(model, k.bin_lo[b], k.bin_hi[b]) : 0.0;
    k.std_error[b] = 0.0;
    k.low_confidence[b] = false;
  }
  k.counts.assign(k.size(), 0);
  return k;
}

/// Reference kernel on an explicit uniform binning of (0, pi].
inline KernelEstimate reference_kernel(const LevyKernelModel& model, int bins, double min_angle) {
  KernelEstimate k;
  k.min_angle = min_angle;
  const double w = kPi / bins;
  for (int b = 0; b < bins; ++b) {
    k.bin_lo.push_back(b * w);
    k.bin_hi.push_back((b + 1) * w);
    k.resolved.push_back(b * w >= min_angle);
    k.density.push_back(k.resolved.back() ? levy_bin_average(model, b * w, (b + 1) * w) : 0.0);
    k.std_error.push_back(0.0);
    k.counts.push_back(0);
    k.low_confidence.push_back(false);
  }
  return k;
}

/// Weighted L2 distance over resolved bins: sqrt(mean (d1 - d2)^2 / (v1 + v2))
/// when either side carries variances, plain RMS difference otherwise.
inline double kernel_distance(const KernelEstimate& a, const KernelEstimate& b) {
  if (a.size() != b.size()) throw PreconditionError("kernel_distance: incompatible binning");
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a.bin_lo[k] - b.bin_lo[k]) > 1e-12 || std::abs(a.bin_hi[k] - b.bin_hi[k]) > 1e-12)
      throw PreconditionError("kernel_distance: incompatible binning");
  double sum = 0.0;
  int used = 0;
  bool weighted = false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a.std_error[k] > 0.0 || b.std_error[k] > 0.0) weighted = true;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a.resolved[k] || !b.resolved[k]) continue;
    const double d = a.density[k] - b.density[k];
    const double v = a.std_error[k] * a.std_error[k] + b.std_error[k] * b.std_error[k];
    if (weighted && v <= 0.0) continue;  // empty bins on both sides carry no information
    sum += weighted ? d * d / v : d * d;
    ++used;
  }
  return used ? std::sqrt(sum / used) : 0.0;
}

/// Number of bins kernel_distance uses for a pair of estimates.
inline int kernel_distance_bins(const KernelEstimate& a, const KernelEstimate& b) {
  int used = 0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a.resolved[k] && b.resolved[k] && (a.std_error[k] > 0.0 || b.std_error[k] > 0.0)) ++used;
  return used;
}

/// 99.9% quantile of kernel_distance between two independent estimates of the
/// same kernel: each weighted square is approximately chi-square with one dof.
inline double kernel_distance_noise_floor(int bins) {
  if (bins <= 0) return 0.0;
  boost::math::chi_squared chi(bins);
  return std::sqrt(boost::math::quantile(chi, 0.999) / bins);
}

// ------------------------------------------------------------ Levy identity

struct LevyIdentity {
  MCEstimate lhs;  ///< mean number of A -> B jumps in s-time t
  double rhs = 0.0;  ///< t * int_A int_B N dsigma dsigma / sigma(boundary)
  double t = 0.0;
  std::uint64_t count = 0;
};

/// Mean A -> B jump count over an s-window of length t, averaged over all
/// windows tiling the simulated local-time range.
inline LevyIdentity levy_identity_check(const BoundaryRun& run, const LevyKernelModel& model, double t) {
  if (!(t > 0.0)) throw PreconditionError("levy_identity_check: t must be positive");
  LevyIdentity out;
  out.t = t;
  out.count = run.stats.levy_count;
  out.lhs = MCEstimate::from(run.stats.levy_rate, run.dt, run.seed, t);
  out.rhs = t * levy_double_integral(model, run.config.arc_a, run.config.arc_b) / kTwoPi;
  return out;
}

/// A -> B excursion rate per unit local time with its compensator value.
struct ExcursionRate {
  MCEstimate rate;
  double reference = 0.0;
  std::uint64_t count = 0;
};

inline ExcursionRate excursion_rate_check(const BoundaryRun& run, const LevyKernelModel& model) {
  ExcursionRate out;
  out.count = run.stats.excursion_count_ab;
  out.rate = MCEstimate::from(run.stats.excursion_rate, run.dt, run.seed);
  out.reference = levy_double_integral(model, run.config.arc_a, run.config.arc_b) / kTwoPi;
  return out;
}

// ------------------------------------------------------------ spectral decay

struct SpectralDecay {
  int mode = 1;
  double lambda = 0.0;
  double std_error = 0.0;
  std::vector<double> t_grid;  ///< lags kept after the noise-floor truncation
  std::vector<double> cf;      ///< pooled E cos(n (Xhat_{s+t} - Xhat_s))
  std::vector<double> cf_stderr;
  std::size_t truncated = 0;   ///< lags dropped below the noise floor
};

namespace detail {

/// Least-squares slope of log y on t with an intercept; returns -slope.
inline double log_slope_rate(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  double mt = 0, my = 0;
  for (std::size_t k = 0; k < n; ++k) {
    mt += t[k];
    my += std::log(y[k]);
  }
  mt /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += (t[k] - mt) * (std::log(y[k]) - my);
    sxx += (t[k] - mt) * (t[k] - mt);
  }
  return -sxy / sxx;
}

}  // namespace detail

/// E exp(i n (Xhat_t - Xhat_0)) = exp(-lambda_n t) under the stationary start;
/// lambda_n is minus the fitted slope of the log characteristic function.
/// Standard errors come from the spread of per-batch fits.
inline SpectralDecay spectral_decay(const BoundaryRun& run, int mode) {
  const auto& c = run.config;
  const auto it = std::find(c.modes.begin(), c.modes.end(), mode);
  if (it == c.modes.end()) throw PreconditionError("spectral_decay: mode " + std::to_string(mode) + " was not recorded");
  const int m = static_cast<int>(it - c.modes.begin());
  const int B = c.batches;
  SpectralDecay out;
  out.mode = mode;
  std::vector<int> keep;
  for (int l = 0; l < c.spectral_points; ++l) {
    const int idx = m * c.spectral_points + l;
    double s = 0, n = 0;
    RunningStats per_batch;
    for (int b = 0; b < B; ++b) {
      s += run.stats.cf_sum[b][idx];
      n += run.stats.cf_count[b][idx];
      if (run.stats.cf_count[b][idx] > 0) per_batch.add(run.stats.cf_sum[b][idx] / run.stats.cf_count[b][idx]);
    }
    const double value = n > 0 ? s / n : 0.0;
    const double se = per_batch.stderr_of_mean();
    if (!(value > 3.0 * se) || !(value > 0.0)) {
      ++out.truncated;
      continue;
    }
    keep.push_back(idx);
    out.t_grid.push_back(run.lag_steps[idx] * c.grid_ds);
    out.cf.push_back(value);
    out.cf_stderr.push_back(se);
  }
  if (keep.size() < 2) throw SolverError("spectral_decay: characteristic function below the noise floor");
  out.lambda = detail::log_slope_rate(out.t_grid, out.cf);
  RunningStats lam;
  for (int b = 0; b < B; ++b) {
    std::vector<double> y;
    for (int idx : keep) y.push_back(run.stats.cf_sum[b][idx] / std::max(1.0, run.stats.cf_count[b][idx]));
    if (std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0; }))
      lam.add(detail::log_slope_rate(out.t_grid, y));
  }
  out.std_error = lam.stderr_of_mean();
  return out;
}

// ------------------------------------------------------------ generator probe

struct GeneratorProbe {
  std::vector<double> bin_theta;  ///< bin centres
  std::vector<double> value, std_error, reference;
  std::vector<std::size_t> n;
  double t = 0.0;
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Binned [(T_t phi)(x) - phi(x)] / t. The reference applies the exact
/// semigroup exp(-t Lambda) of the given DtN operator, so the finite-t
/// curvature of the probe is not mistaken for a mismatch.
inline GeneratorProbe generator_probe(const BoundaryRun& run, const DtNOperator& op) {
  const auto& c = run.config;
  GeneratorProbe out;
  const int q = std::max(1, static_cast<int>(std::lround(c.probe_t / c.grid_ds)));
  out.t = q * c.grid_ds;
  const double w = kTwoPi / c.probe_bins;
  const auto& phi = c.probe_phi;
  for (int b = 0; b < c.probe_bins; ++b) {
    const double lo = b * w, hi = lo + w;
    const auto& st = run.stats.probe[static_cast<std::size_t>(b)];
    out.bin_theta.push_back(lo + 0.5 * w);
    out.value.push_back(st.mean);
    out.std_error.push_back(st.stderr_of_mean());
    out.n.push_back(st.n);
    // Bin average of (exp(-lambda_n t) - 1) / t times each Fourier mode.
    double ref = 0.0;
    for (int n = 1; n <= phi.degree(); ++n) {
      const double g = (std::exp(-op.lambda(n) * out.t) - 1.0) / out.t;
      const double avg_cos = (std::sin(n * hi) - std::sin(n * lo)) / (n * w);
      const double avg_sin = (std::cos(n * lo) - std::cos(n * hi)) / (n * w);
      ref += g * (phi.cos_coeff(n) * avg_cos + phi.sin_coeff(n) * avg_sin);
    }
    out.reference.push_back(ref);
    if (st.n > 1 && out.std_error.back() > 0.0) {
      const double z = (st.mean - ref) / out.std_error.back();
      out.chi2 += z * z;
      ++out.dof;
    }
  }
  if (out.dof > 0) out.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(out.dof), out.chi2));
  return out;
}

}  // namespace bdlab
