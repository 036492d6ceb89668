#pragma once

// Experiment runner: turns a Config into simulations and reference solves,
// writes the CSV artifacts and a summary with one verdict per check.

#include "bdlab/boundary.hpp"
#include "bdlab/config.hpp"
#include "bdlab/estimators.hpp"
#include "bdlab/excursions.hpp"
#include "bdlab/reference/dtn_check.hpp"
#include "bdlab/reference/fd.hpp"
#include "bdlab/reference/integro.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace bdlab {

enum class Verdict { Pass, Inconclusive, Fail };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Inconclusive: return "inconclusive";
    case Verdict::Fail: return "fail";
  }
  return "?";
}

struct Check {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  std::string tolerance;
  Verdict verdict = Verdict::Pass;
  std::size_t n = 0;
  double dt = 0.0;
};

// ----------------------------------------------------------- check builders
//
// Monte Carlo checks turn "inconclusive" instead of "fail" when the standard
// error is too large for the tolerance to be meaningful (3 se > tol).

inline Check check_abs(std::string name, double value, double ref, double tol, double se = 0.0) {
  Check c{std::move(name), value, ref, "abs " + format_number(tol)};
  const double dev = std::abs(value - ref);
  c.verdict = dev <= tol ? Verdict::Pass : (3.0 * se > tol ? Verdict::Inconclusive : Verdict::Fail);
  return c;
}

inline Check check_rel(std::string name, double value, double ref, double tol, double se = 0.0) {
  Check c{std::move(name), value, ref, "rel " + format_number(tol)};
  const double scale = std::abs(ref);
  const double dev = std::abs(value - ref);
  c.verdict = dev <= tol * scale ? Verdict::Pass : (3.0 * se > tol * scale ? Verdict::Inconclusive : Verdict::Fail);
  return c;
}

inline Check check_sigma(std::string name, double value, double ref, double se, double k) {
  Check c{std::move(name), value, ref, format_number(k) + " stderr (" + format_number(k * se) + ")"};
  c.verdict = std::abs(value - ref) <= k * se ? Verdict::Pass : Verdict::Fail;
  return c;
}

inline Check check_range(std::string name, double value, double lo, double hi, double se = 0.0) {
  Check c{std::move(name), value, 0.5 * (lo + hi), "[" + format_number(lo) + "," + format_number(hi) + "]"};
  const bool in = value >= lo && value <= hi;
  c.verdict = in ? Verdict::Pass : (3.0 * se > 0.5 * (hi - lo) ? Verdict::Inconclusive : Verdict::Fail);
  return c;
}

inline Check check_below(std::string name, double value, double bound) {
  Check c{std::move(name), value, bound, "< " + format_number(bound)};
  c.verdict = value < bound ? Verdict::Pass : Verdict::Fail;
  return c;
}

inline Check check_above(std::string name, double value, double bound) {
  Check c{std::move(name), value, bound, "> " + format_number(bound)};
  c.verdict = value > bound ? Verdict::Pass : Verdict::Fail;
  return c;
}

// ------------------------------------------------------ config interpretation

/// Numbers with an optional pi factor: 0.3, pi, -pi/8, 7*pi/8, 2pi.
inline double parse_angle(const std::string& text, const std::string& key) {
  std::string s = Config::trim(text);
  double sign = 1.0;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    if (s[0] == '-') sign = -1.0;
    s = Config::trim(s.substr(1));
  }
  const auto p = s.find("pi");
  if (p == std::string::npos) {
    Config tmp;
    tmp.set("x", s);
    return sign * tmp.get_double("x");
  }
  double num = 1.0, den = 1.0;
  std::string head = Config::trim(s.substr(0, p)), tail = Config::trim(s.substr(p + 2));
  if (!head.empty() && head.back() == '*') head = Config::trim(head.substr(0, head.size() - 1));
  Config tmp;
  if (!head.empty()) {
    tmp.set("x", head);
    num = tmp.get_double("x");
  }
  if (!tail.empty()) {
    if (tail[0] != '/') throw ConfigError("key '" + key + "': cannot parse angle '" + text + "'");
    tmp.set("x", Config::trim(tail.substr(1)));
    den = tmp.get_double("x");
  }
  return sign * num * kPi / den;
}

inline std::vector<double> get_angles(const Config& cfg, const std::string& key, const std::string& fallback) {
  std::vector<double> out;
  for (const auto& item : Config::split_list(cfg.get_string(key, fallback))) out.push_back(parse_angle(item, key));
  return out;
}

inline Arc get_arc(const Config& cfg, const std::string& key, const std::string& fallback) {
  const auto v = get_angles(cfg, key, fallback);
  if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError("key '" + key + "': expected 'lo, hi' with lo < hi");
  return {v[0], v[1]};
}

inline Vec2 get_point(const Config& cfg, const std::string& key, const std::string& fallback) {
  Config tmp;
  tmp.set(key, cfg.get_string(key, fallback));
  const auto v = tmp.get_doubles(key);
  if (v.size() != 2) throw ConfigError("key '" + key + "': expected 'x, y'");
  return {v[0], v[1]};
}

/// Boundary data: a sum of terms "[coef] cos n", "[coef] sin n", "[coef] const",
/// "[coef] arc lo hi" (indicator), joined by '+'.
struct BoundarySpec {
  FourierSeries fourier;
  std::vector<std::pair<Arc, double>> arcs;
  std::string text;

  bool is_fourier() const { return arcs.empty(); }
  double operator()(double theta) const {
    double v = fourier(theta);
    for (const auto& [arc, c] : arcs) {
      const double u = wrap_angle(theta - arc.lo);
      if (u <= arc.hi - arc.lo) v += c;
    }
    return v;
  }

  static BoundarySpec parse(const std::string& text, const std::string& key) {
    BoundarySpec d;
    d.text = text;
    std::string term;
    std::istringstream in(text);
    while (std::getline(in, term, '+')) {
      std::istringstream ts(term);
      std::vector<std::string> tok;
      for (std::string w; ts >> w;) tok.push_back(w);
      if (tok.empty()) throw ConfigError("key '" + key + "': empty term in '" + text + "'");
      double coef = 1.0;
      std::size_t i = 0;
      if (tok[0] != "cos" && tok[0] != "sin" && tok[0] != "const" && tok[0] != "arc") {
        coef = parse_angle(tok[0], key);
        i = 1;
      }
      if (i >= tok.size()) throw ConfigError("key '" + key + "': missing function in '" + term + "'");
      const std::string kind = tok[i];
      auto arg = [&](std::size_t j) {
        if (i + j >= tok.size()) throw ConfigError("key '" + key + "': missing argument in '" + term + "'");
        return parse_angle(tok[i + j], key);
      };
      if (kind == "const") {
        d.fourier.a0 += coef;
      } else if (kind == "cos" || kind == "sin") {
        const double nn = arg(1);
        if (nn < 1 || nn != std::floor(nn)) throw ConfigError("key '" + key + "': mode must be a positive integer");
        const auto n = static_cast<std::size_t>(nn);
        if (d.fourier.a.size() < n) {
          d.fourier.a.resize(n, 0.0);
          d.fourier.b.resize(n, 0.0);
        }
        (kind == "cos" ? d.fourier.a : d.fourier.b)[n - 1] += coef;
      } else if (kind == "arc") {
        d.arcs.push_back({Arc{arg(1), arg(2)}, coef});
      } else {
        throw ConfigError("key '" + key + "': unknown boundary function '" + kind + "'");
      }
    }
    return d;
  }
};

inline Domain domain_from(const Config& cfg) {
  const std::string kind = cfg.get_string("domain.kind", "unit-disk");
  if (kind == "unit-disk") return Domain::unit_disk();
  if (kind == "unit-square") return Domain::unit_square();
  if (kind == "star-smooth") return Domain::star(cfg.get_doubles("domain.rho_coeffs"));
  throw ConfigError("key 'domain.kind': unknown domain '" + kind + "'");
}

inline ConductivityField field_from(const Config& cfg, const std::string& prefix = "kappa") {
  const std::string family = cfg.get_string(prefix + ".family", "constant");
  if (family == "constant") return ConductivityField::constant(cfg.get_double(prefix + ".value", 1.0));
  if (family == "radial")
    return ConductivityField::radial(cfg.get_doubles(prefix + ".profile_coeffs"), cfg.get_double(prefix + ".collar", 0.0));
  if (family == "bump")
    return ConductivityField::bump(get_point(cfg, prefix + ".bump.center", "0, 0"), cfg.get_double(prefix + ".bump.width"),
                                   cfg.get_double(prefix + ".bump.height"));
  throw ConfigError("key '" + prefix + ".family': unknown family '" + family + "'");
}

inline SimParams sim_params_from(const Config& cfg, double default_dt) {
  SimParams p;
  p.dt = cfg.get_double("sim.dt", default_dt);
  if (!(p.dt > 0.0)) throw ConfigError("key 'sim.dt': must be positive");
  const std::string c = cfg.get_string("sim.c_cal", "auto");
  if (c != "auto") p.c_cal = cfg.get_double("sim.c_cal");
  return p;
}

inline BoundaryRunConfig boundary_config_from(const Config& cfg) {
  BoundaryRunConfig b;
  b.s_max = cfg.get_double("boundary.s_max", 100.0);
  b.min_angle = cfg.get_double("boundary.min_angle", 0.05);
  b.kernel_bins = static_cast<int>(cfg.get_int("boundary.kernel_bins", 16));
  b.grid_ds = cfg.get_double("boundary.grid_ds", 0.005);
  b.batches = static_cast<int>(cfg.get_int("boundary.batches", 20));
  b.arc_a = get_arc(cfg, "levy.arc_a", "-pi/8, pi/8");
  b.arc_b = get_arc(cfg, "levy.arc_b", "7pi/8, 9pi/8");
  b.modes.clear();
  for (double m : cfg.get_doubles("spectral.modes", {1, 2, 3})) b.modes.push_back(static_cast<int>(m));
  b.spectral_t_max = cfg.get_double("spectral.t_max", 1.0);
  b.spectral_points = static_cast<int>(cfg.get_int("spectral.points", 10));
  const auto phi = BoundarySpec::parse(cfg.get_string("probe.phi", "cos 1"), "probe.phi");
  if (!phi.is_fourier()) throw ConfigError("key 'probe.phi': the generator probe needs a trigonometric polynomial");
  b.probe_phi = phi.fourier;
  b.probe_t = cfg.get_double("probe.t", 0.02);
  b.probe_bins = static_cast<int>(cfg.get_int("probe.bins", 16));
  b.keep_paths = static_cast<std::size_t>(cfg.get_int("sim.keep_paths", 2));
  b.keep_trace = static_cast<std::size_t>(cfg.get_int("output.trace_samples", 2000));
  return b;
}

// --------------------------------------------------------------- artifacts

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << header << '\n';
  }
  template <class... T>
  void row(const T&... v) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(v), first = false), ...);
    out_ << '\n';
  }

private:
  static std::string cell(double v) { return format_number(v, 12); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }
  std::ofstream out_;
};

/// Everything an experiment produces.
struct ExperimentResult {
  std::string experiment;
  std::vector<Check> checks;
  std::vector<std::string> artifacts;
  std::uint64_t seed = 0;
  double dt = 0.0;
  std::size_t n = 0;
  double runtime_s = 0.0;
  std::string config_hash;

  Verdict overall() const {
    Verdict v = Verdict::Pass;
    for (const auto& c : checks) v = std::max(v, c.verdict);
    return v;
  }
};

struct ExperimentContext {
  const Config& cfg;
  std::filesystem::path out;
  RunSettings run;
  ExperimentResult& result;

  std::filesystem::path file(const std::string& name) {
    result.artifacts.push_back(name);
    return out / name;
  }
  void add(Check c, std::size_t n, double dt) {
    c.n = n;
    c.dt = dt;
    result.checks.push_back(std::move(c));
  }
  double tol(const std::string& name, double fallback) const { return cfg.get_double("tol." + name, fallback); }
};

namespace detail {

inline void write_sample_paths(ExperimentContext& ctx, const Vec2& x0, double horizon, const ConductivityField& field,
                               const Domain& domain, const SimParams& params) {
  const auto keep = static_cast<std::size_t>(ctx.cfg.get_int("sim.keep_paths", 2));
  if (keep == 0) return;
  CsvWriter w(ctx.file("paths.csv"), "path_id,t,x1,x2,L");
  for (std::size_t i = 0; i < keep; ++i) {
    // Streams beyond the estimator's range so the sample paths are independent draws.
    RngStream rng(ctx.run.seed, (1ULL << 40) + i);
    const auto p = sample_path(x0, horizon, field, domain, rng, params);
    const std::size_t stride = std::max<std::size_t>(1, p.size() / 2000);
    for (std::size_t k = 0; k < p.size(); k += stride)
      w.row(i, p.times[k], p.points[k].x(), p.points[k].y(), p.local_time[k]);
  }
}

inline DtNOperator reference_operator(const Config& cfg, const ConductivityField& field) {
  return dtn_eigenvalues_radial(field, static_cast<int>(cfg.get_int("ref.n_max", 64)));
}

inline LevyKernelModel reference_model(const Config& cfg, const DtNOperator& op) {
  return LevyKernelModel::from_dtn(op, cfg.get_double("ref.abel_r", 1.0 - 1e-6));
}

/// Deterministic solution of the Dirichlet or co-normal problem at x0.
inline double pde_reference(const Config& cfg, const ConductivityField& field, const Domain& domain,
                            const BoundarySpec& data, const Vec2& x0, bool neumann) {
  const double h = cfg.get_double("ref.h", 1.0 / 64);
  if (domain.kind() == DomainKind::UnitDisk) {
    if (!neumann && field.is_constant()) {
      // Poisson integral; constant kappa only changes the clock.
      auto g = [&](double t) { return poisson_kernel_disk(x0, t) * data(t); };
      double total = 0.0;
      for (int k = 0; k < 16; ++k)
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, k * kTwoPi / 16, (k + 1) * kTwoPi / 16,
                                                                               15, 1e-12);
      return total;
    }
    if (neumann && field.is_constant() && data.is_fourier()) {
      // Mean-zero harmonic solution: mode n scales by r^n / (kappa n).
      const double r = x0.norm(), th = std::atan2(x0.y(), x0.x()), a = field.scalar(x0);
      double u = 0.0;
      for (int n = 1; n <= data.fourier.degree(); ++n)
        u += std::pow(r, n) * (data.fourier.cos_coeff(n) * std::cos(n * th) + data.fourier.sin_coeff(n) * std::sin(n * th)) /
             (a * n);
      return u;
    }
    const int n_r = static_cast<int>(std::lround(1.0 / h));
    const PolarGrid grid{n_r, 2 * static_cast<int>(std::lround(kPi / h))};
    auto u = neumann ? solve_neumann_fd(grid, field, data) : solve_dirichlet_fd(grid, field, data);
    return u(x0);
  }
  if (domain.kind() == DomainKind::UnitSquare) {
    const SquareGrid grid{static_cast<int>(std::lround(1.0 / h)), 1.0};
    auto u = neumann ? solve_neumann_fd(grid, field, data) : solve_dirichlet_fd(grid, field, data);
    return u(x0);
  }
  throw PreconditionError("no deterministic reference on star domains; use the disk or the square");
}

inline void write_kernel(ExperimentContext& ctx, const std::string& name, const KernelEstimate& k,
                         const KernelEstimate& ref) {
  CsvWriter w(ctx.file(name), "delta_mid,density,stderr,reference_value");
  for (std::size_t b = 0; b < k.size(); ++b) w.row(k.mid(b), k.density[b], k.std_error[b], ref.density[b]);
}

inline void write_boundary_samples(ExperimentContext& ctx, const BoundaryRun& run, bool trace, bool jumps,
                                   bool excursions) {
  if (trace) {
    CsvWriter w(ctx.file("trace.csv"), "path_id,s,theta");
    for (const auto& t : run.stats.kept_trace) w.row(t.path_id, t.s, t.theta);
  }
  if (jumps) {
    CsvWriter w(ctx.file("jumps.csv"), "path_id,s,theta_from,theta_to,gap");
    for (const auto& j : run.stats.kept_jumps) w.row(j.path_id, j.jump.s, j.jump.from.theta, j.jump.to.theta, j.jump.gap);
  }
  if (excursions) {
    CsvWriter w(ctx.file("excursions.csv"), "path_id,s,theta_start,theta_end,duration");
    for (const auto& e : run.stats.kept_excursions)
      w.row(e.path_id, e.excursion.local_time_stamp, e.excursion.start.theta, e.excursion.end.theta,
            e.excursion.duration);
  }
}

inline BoundaryRun boundary_run(ExperimentContext& ctx, const ConductivityField& field, std::uint64_t seed,
                                double default_dt = 2e-5) {
  const auto& cfg = ctx.cfg;
  if (cfg.get_string("domain.kind", "unit-disk") != "unit-disk")
    throw PreconditionError("boundary-process experiments run on the unit disk");
  RunSettings rs = ctx.run;
  rs.seed = seed;
  rs.chunk = 1;
  const auto params = sim_params_from(cfg, default_dt);
  const auto n = static_cast<std::size_t>(cfg.get_int("sim.n_paths", 100));
  auto run = run_boundary_process(field, n, boundary_config_from(cfg), params, rs);
  ctx.result.n = n;
  ctx.result.dt = params.dt;
  return run;
}

inline void spectral_checks(ExperimentContext& ctx, const BoundaryRun& run, const DtNOperator& op,
                            const std::string& prefix) {
  for (int n : run.config.modes) {
    const auto d = spectral_decay(run, n);
    ctx.add(check_rel(prefix + ".lambda" + std::to_string(n), d.lambda, op.lambda(n),
                      ctx.tol("spectral.rel" + std::to_string(n), 0.04 + 0.01 * n), d.std_error),
            run.stats.n_paths, run.dt);
  }
}

}  // namespace detail

// ------------------------------------------------------------- experiments

namespace experiments {

inline void hitting(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto domain = domain_from(cfg);
  const auto field = field_from(cfg);
  const auto params = sim_params_from(cfg, 1e-4);
  const Vec2 x0 = get_point(cfg, "start.x0", "0, 0");
  const auto n = static_cast<std::size_t>(cfg.get_int("sim.n_paths", 100000));
  const int bins = static_cast<int>(cfg.get_int("hitting.bins", 16));
  const auto h = estimate_hitting_law(x0, field, domain, n, bins, params, ctx.run);
  ctx.result.n = n;
  ctx.result.dt = params.dt;
  const double abs_tol = ctx.tol("hitting.abs", 0.003);
  CsvWriter w(ctx.file("hitting.csv"), "bin_lo,bin_hi,count,frequency,stderr,reference_value");
  for (int k = 0; k < bins; ++k) {
    const double ref = h.reference.empty() ? std::numeric_limits<double>::quiet_NaN() : h.reference[k];
    w.row(h.bin_lo[k], h.bin_hi[k], h.counts[k], h.frequency[k], h.std_error[k], ref);
    if (!h.reference.empty())
      ctx.add(check_abs("hitting.bin" + std::to_string(k), h.frequency[k], ref, abs_tol, h.std_error[k]), n, params.dt);
  }
  if (!h.reference.empty()) {
    double worst_se = 0.0;
    for (int k = 0; k < bins; ++k) worst_se = std::max(worst_se, h.std_error[k] / h.reference[k]);
    Check c = check_below("hitting.sup_relative_error", h.sup_relative_error, ctx.tol("hitting.sup_rel", 0.05));
    if (c.verdict == Verdict::Fail && 3.0 * worst_se > ctx.tol("hitting.sup_rel", 0.05)) c.verdict = Verdict::Inconclusive;
    ctx.add(c, n, params.dt);
  } else if (field.rotation_invariant() && domain.kind() == DomainKind::UnitDisk && x0.y() == 0.0) {
    // No closed form: the law is still mirror-symmetric about the x-axis.
    for (int k = 1; k < bins / 2; ++k) {
      const double se = std::hypot(h.std_error[k], h.std_error[bins - k]);
      ctx.add(check_sigma("hitting.mirror" + std::to_string(k), h.frequency[k], h.frequency[bins - k], se, 4.0), n,
              params.dt);
    }
  }
}

inline void feynman_dirichlet(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto domain = domain_from(cfg);
  const auto field = field_from(cfg);
  const auto params = sim_params_from(cfg, 1e-4);
  const Vec2 x0 = get_point(cfg, "start.x0", "0.3, 0");
  const auto data = BoundarySpec::parse(cfg.get_string("data.phi", "cos 1"), "data.phi");
  const auto n = static_cast<std::size_t>(cfg.get_int("sim.n_paths", 100000));
  const auto e = feynman_kac_dirichlet(x0, data, field, domain, n, params, ctx.run);
  ctx.result.n = n;
  ctx.result.dt = params.dt;
  const double ref = cfg.has("data.expected") ? cfg.get_double("data.expected")
                                              : detail::pde_reference(cfg, field, domain, data, x0, false);
  CsvWriter w(ctx.file("feynman_kac.csv"), "x1,x2,estimate,stderr,reference_value,n,dt");
  w.row(x0.x(), x0.y(), e.value, e.std_error, ref, n, params.dt);
  ctx.add(check_abs("dirichlet.u(x0)", e.value, ref, ctx.tol("fk.abs", 0.01), e.std_error), n, params.dt);
}

inline void feynman_neumann(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto domain = domain_from(cfg);
  const auto field = field_from(cfg);
  const auto params = sim_params_from(cfg, 1e-3);
  const Vec2 x0 = get_point(cfg, "start.x0", "0.3, 0");
  const auto data = BoundarySpec::parse(cfg.get_string("data.phi", "cos 1"), "data.phi");
  const double T = cfg.get_double("sim.horizon", 20.0);
  const auto n = static_cast<std::size_t>(cfg.get_int("sim.n_paths", 100000));
  const auto e = feynman_kac_neumann(x0, data, field, domain, T, n, params, ctx.run);
  ctx.result.n = n;
  ctx.result.dt = params.dt;
  const double ref = cfg.has("data.expected") ? cfg.get_double("data.expected")
                                              : detail::pde_reference(cfg, field, domain, data, x0, true);
  CsvWriter w(ctx.file("feynman_kac.csv"), "horizon,estimator,estimate,stderr,reference_value,n,dt");
  w.row(T, "control_variate", e.at_T.value, e.at_T.std_error, ref, n, params.dt);
  w.row(0.5 * T, "control_variate", e.at_half_T.value, e.at_half_T.std_error, ref, n, params.dt);
  w.row(T, "raw", e.raw_at_T.value, e.raw_at_T.std_error, ref, n, params.dt);
  w.row(0.5 * T, "raw", e.raw_at_half_T.value, e.raw_at_half_T.std_error, ref, n, params.dt);
  const double tol = ctx.tol("fk.abs", 0.02);
  ctx.add(check_abs("neumann.u(x0).T", e.at_T.value, ref, tol, e.at_T.std_error), n, params.dt);
  ctx.add(check_below("neumann.|u(T)-u(T/2)|", std::abs(e.at_T.value - e.at_half_T.value), ctx.tol("fk.convergence", 0.01)),
          n, params.dt);
  detail::write_sample_paths(ctx, x0, std::min(T, 5.0), field, domain, params);
}

inline void revuz(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto domain = domain_from(cfg);
  const auto field = field_from(cfg);
  const auto params = sim_params_from(cfg, 1e-4);
  const auto data = BoundarySpec::parse(cfg.get_string("data.phi", "const 1"), "data.phi");
  const double t = cfg.get_double("sim.horizon", 1.0);
  const auto n = static_cast<std::size_t>(cfg.get_int("sim.n_paths", 10000));
  const auto r = revuz_check(field, domain, data, t, n, params, ctx.run);
  ctx.result.n = n;
  ctx.result.dt = params.dt;
  CsvWriter w(ctx.file("revuz.csv"), "t,lhs,stderr,rhs,n,dt");
  w.row(t, r.lhs.value, r.lhs.std_error, r.rhs, n, params.dt);
  if (std::abs(r.rhs) > 1e-9)
    ctx.add(check_rel("revuz.lhs", r.lhs.value, r.rhs, ctx.tol("revuz.rel", 0.02), r.lhs.std_error), n, params.dt);
  else
    ctx.add(check_sigma("revuz.lhs", r.lhs.value, 0.0, r.lhs.std_error, 3.0), n, params.dt);
  detail::write_sample_paths(ctx, domain.centroid(), std::min(t, 2.0), field, domain, params);
}

inline void cauchy_kernel(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto field = field_from(cfg);
  const auto run = detail::boundary_run(ctx, field, ctx.run.seed);
  const auto op = detail::reference_operator(cfg, field);
  const auto model = detail::reference_model(cfg, op);
  const auto k = estimate_jump_kernel(run);
  const auto ref = reference_kernel(model, k);
  detail::write_kernel(ctx, "kernel.csv", k, ref);
  detail::write_boundary_samples(ctx, run, true, true, true);
  const double from = parse_angle(cfg.get_string("kernel.check_from", "pi/4"), "kernel.check_from");
  const double tol = ctx.tol("kernel.rel", 0.10);
  const auto n = run.stats.n_paths;
  // A short budget lacks power rather than contradicting the reference.
  Check budget = check_above("kernel.local_time_budget", run.stats.s_total, ctx.tol("kernel.min_budget", 1e3));
  if (budget.verdict == Verdict::Fail) budget.verdict = Verdict::Inconclusive;
  ctx.add(budget, n, run.dt);
  for (std::size_t b = 0; b < k.size(); ++b) {
    if (k.bin_lo[b] + 1e-12 < from || !k.resolved[b]) continue;
    Check c = check_rel("kernel.bin" + std::to_string(b), k.density[b], ref.density[b], tol, k.std_error[b]);
    if (k.low_confidence[b] && c.verdict == Verdict::Fail) c.verdict = Verdict::Inconclusive;
    ctx.add(c, n, run.dt);
  }
  // Normalization-free shape check: the two bins flanking pi/2 against the last bin.
  const std::size_t B = k.size();
  const std::size_t mid = B / 2;
  if (B >= 4 && B % 2 == 0) {
    const double c_mid = static_cast<double>(k.counts[mid - 1] + k.counts[mid]) / 2.0;
    const double c_end = static_cast<double>(k.counts[B - 1]);
    const double ratio = c_end > 0 ? c_mid / c_end : 0.0;
    const double se = c_end > 0 ? ratio * std::sqrt(1.0 / std::max(1.0, 2 * c_mid) + 1.0 / c_end) : 1.0;
    Check c = check_abs("kernel.ratio(pi/2,pi)", ratio, model(kPi / 2) / model(kPi), ctx.tol("kernel.ratio_abs", 0.3), se);
    ctx.add(c, n, run.dt);
  }
}

inline void generator(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto field = field_from(cfg);
  const auto run = detail::boundary_run(ctx, field, ctx.run.seed);
  const auto op = detail::reference_operator(cfg, field);
  const auto p = generator_probe(run, op);
  CsvWriter w(ctx.file("probes.csv"), "bin_theta,probe_value,stderr,reference_value");
  for (std::size_t b = 0; b < p.value.size(); ++b) w.row(p.bin_theta[b], p.value[b], p.std_error[b], p.reference[b]);
  Check c = check_above("probe.chi2_p_value", p.p_value, ctx.tol("probe.p_value", 0.01));
  c.reference = p.chi2;
  c.tolerance += " (chi2 " + format_number(p.chi2) + ", dof " + std::to_string(p.dof) + ")";
  ctx.add(c, run.stats.n_paths, run.dt);
}

inline void spectral(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto field = field_from(cfg);
  const auto run = detail::boundary_run(ctx, field, ctx.run.seed);
  const auto op = detail::reference_operator(cfg, field);
  CsvWriter w(ctx.file("spectral.csv"), "n,t,cf,stderr,reference_value");
  for (int n : run.config.modes) {
    const auto d = spectral_decay(run, n);
    for (std::size_t k = 0; k < d.t_grid.size(); ++k)
      w.row(n, d.t_grid[k], d.cf[k], d.cf_stderr[k], std::exp(-op.lambda(n) * d.t_grid[k]));
  }
  detail::spectral_checks(ctx, run, op, "spectral");
}

inline void levy_identity(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto field = field_from(cfg);
  const auto run = detail::boundary_run(ctx, field, ctx.run.seed);
  const auto model = detail::reference_model(cfg, detail::reference_operator(cfg, field));
  const double t = cfg.get_double("levy.t", 1.0);
  const auto l = levy_identity_check(run, model, t);
  const auto l2 = levy_identity_check(run, model, 2 * t);
  detail::write_boundary_samples(ctx, run, false, true, false);
  CsvWriter w(ctx.file("levy.csv"), "t,lhs,stderr,rhs,count");
  w.row(t, l.lhs.value, l.lhs.std_error, l.rhs, l.count);
  w.row(2 * t, l2.lhs.value, l2.lhs.std_error, l2.rhs, l2.count);
  const double rel_se = l.lhs.std_error / l.rhs;
  ctx.add(check_range("levy.lhs/rhs", l.lhs.value / l.rhs, 1.0 - ctx.tol("levy.rel", 0.1), 1.0 + ctx.tol("levy.rel", 0.1),
                      rel_se),
          run.stats.n_paths, run.dt);
  ctx.add(check_sigma("levy.linearity(2t)", l2.lhs.value, 2.0 * l.lhs.value, 2.0 * l.lhs.std_error, 1.0),
          run.stats.n_paths, run.dt);
}

inline void excursion_rate(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto field = field_from(cfg);
  const auto run = detail::boundary_run(ctx, field, ctx.run.seed);
  const auto model = detail::reference_model(cfg, detail::reference_operator(cfg, field));
  const auto e = excursion_rate_check(run, model);
  detail::write_boundary_samples(ctx, run, false, false, true);
  ctx.add(check_rel("excursion.rate(A->B)", e.rate.value, e.reference, ctx.tol("excursion.rel", 0.15), e.rate.std_error),
          run.stats.n_paths, run.dt);
  const auto& s = run.stats;
  Check bij{"excursion.bijection_unmatched", static_cast<double>((s.n_jumps - s.n_matched) + (s.n_excursions - s.n_matched)),
            0.0, "exact"};
  bij.verdict = s.n_jumps == s.n_matched && s.n_excursions == s.n_matched && s.n_jumps > 0 ? Verdict::Pass : Verdict::Fail;
  ctx.add(bij, s.n_paths, run.dt);
}

inline void discriminate(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto f1 = field_from(cfg, "kappa");
  const auto f2 = field_from(cfg, "kappa2");
  const std::uint64_t seed2 = static_cast<std::uint64_t>(cfg.get_int("sim.seed2", static_cast<std::int64_t>(ctx.run.seed) + 1));
  const auto r1 = detail::boundary_run(ctx, f1, ctx.run.seed, 1e-4);
  const auto r2 = detail::boundary_run(ctx, f2, ctx.run.seed, 1e-4);
  const auto r1b = detail::boundary_run(ctx, f1, seed2, 1e-4);
  const auto op1 = detail::reference_operator(cfg, f1), op2 = detail::reference_operator(cfg, f2);
  const auto m1 = detail::reference_model(cfg, op1), m2 = detail::reference_model(cfg, op2);
  const auto n = r1.stats.n_paths;

  const auto d1 = spectral_decay(r1, 1), d2 = spectral_decay(r2, 1);
  const double pooled = std::hypot(d1.std_error, d2.std_error);
  ctx.add(check_above("discriminate.lambda1_separation_in_stderr", std::abs(d1.lambda - d2.lambda) / pooled,
                      ctx.tol("discriminate.sigmas", 3.0)),
          n, r1.dt);

  const auto k1 = estimate_jump_kernel(r1), k2 = estimate_jump_kernel(r2), k1b = estimate_jump_kernel(r1b);
  const auto ref1 = reference_kernel(m1, k1), ref2 = reference_kernel(m2, k1);
  detail::write_kernel(ctx, "kernel_1.csv", k1, ref1);
  detail::write_kernel(ctx, "kernel_2.csv", k2, ref2);
  ctx.add(check_above("discriminate.reference_kernel_distance", kernel_distance(ref1, ref2), 0.0), n, r1.dt);
  const double floor = kernel_distance_noise_floor(kernel_distance_bins(k1, k1b));
  Check same = check_below("discriminate.same_field_two_seeds", kernel_distance(k1, k1b), floor);
  same.tolerance = "noise floor " + format_number(floor);
  ctx.add(same, n, r1.dt);
  ctx.add(check_above("discriminate.empirical_kernel_distance", kernel_distance(k1, k2), ctx.tol("discriminate.kernel_sigmas", 5.0)),
          n, r1.dt);
}

inline void dtn_reference(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto field = field_from(cfg);
  const int n_max = static_cast<int>(cfg.get_int("ref.n_max", 8));
  const auto op = dtn_eigenvalues_radial(field, n_max);
  {
    CsvWriter w(ctx.file("dtn.csv"), "n,lambda,kappa_label");
    for (int n = 0; n <= n_max; ++n) w.row(n, op.lambda(n), op.kappa_label);
  }
  const double abel_r = cfg.get_double("ref.abel_r", 1.0 - 1e-6);
  const auto op_kernel = n_max >= 2 ? op : dtn_eigenvalues_radial(field, 2);
  {
    CsvWriter w(ctx.file("kernel_ref.csv"), "delta,N_value,kappa_label");
    const int points = static_cast<int>(cfg.get_int("ref.kernel_points", 64));
    for (int k = 1; k <= points; ++k) {
      const double d = kPi * k / points;
      w.row(d, levy_kernel(op_kernel, d, abel_r), op.kappa_label);
    }
  }
  ctx.result.n = static_cast<std::size_t>(n_max);
  if (field.is_constant()) {
    const double a = field.scalar(Vec2::Zero());
    double worst = 0.0;
    for (int n = 0; n <= n_max; ++n) worst = std::max(worst, std::abs(op.lambda(n) - a * n));
    ctx.add(check_below("dtn.max|lambda_n - a n|", worst, ctx.tol("dtn.exact", 1e-8)), 0, 0.0);
  } else {
    double worst = 0.0;
    for (int n = 1; n <= std::min(n_max, 8); ++n) worst = std::max(worst, std::abs(op.lambda(n) - dtn_eigenvalue_dopri(field, n)));
    ctx.add(check_below("dtn.max|riccati - dopri|", worst, ctx.tol("dtn.integrators", 1e-8)), 0, 0.0);
  }
  const double c = cfg.get_double("ref.scale_c", 2.0);
  const auto scaled = dtn_eigenvalues_radial(field.multiplied(c), n_max);
  double worst = 0.0;
  for (int n = 1; n <= n_max; ++n) worst = std::max(worst, std::abs(scaled.lambda(n) - c * op.lambda(n)) / (c * op.lambda(n)));
  ctx.add(check_below("dtn.constant_scaling_rel", worst, ctx.tol("dtn.scaling", 1e-10)), 0, 0.0);

  const auto phi = BoundarySpec::parse(cfg.get_string("data.phi", "cos 1"), "data.phi");
  if (phi.is_fourier() && phi.fourier.degree() <= op_kernel.n_max) {
    const double eps = cfg.get_double("ref.epsilon", 1e-3);
    const auto a = integro_decomposition_check(op_kernel, phi.fourier, eps, abel_r, 32);
    const auto b = integro_decomposition_check(op_kernel, phi.fourier, 0.5 * eps, abel_r, 32);
    ctx.add(check_below("integro.residual(eps)", a.residual_sup, ctx.tol("integro.residual", 1e-3)), 0, 0.0);
    ctx.add(check_range("integro.residual_ratio(eps/2)", b.residual_sup / a.residual_sup, 0.4, 0.6), 0, 0.0);
  }
}

inline void scaling(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto domain = domain_from(cfg);
  const auto field = field_from(cfg);
  const auto params = sim_params_from(cfg, 1e-3);
  const double T = cfg.get_double("sim.horizon", 2.0);
  const double R = cfg.get_double("scale.R", 2.0);
  const auto records = static_cast<std::size_t>(cfg.get_int("scale.records", 100));
  const Vec2 x0 = get_point(cfg, "start.x0", "0, 0");
  struct Worst {
    double cvf = 0, inverse = 0, L = 0, tau = 0, trace = 0;
  };
  auto worst = parallel_reduce<Worst>(
      records, ctx.run.parallel(), [] { return Worst{}; },
      [&](std::size_t i, Worst& w) {
        RngStream rng(ctx.run.seed, ctx.run.stream_offset + i);
        const auto p = sample_path(x0, T, field, domain, rng, params);
        const double top = p.final_local_time();
        if (top <= 0.0) return;
        // Change of variables with two test functions on a random level window.
        const double a = top * 0.5 * rng.uniform(), b = a + (top - a) * rng.uniform();
        for (auto f : {std::function<double(double)>([](double t) { return std::cos(3 * t); }),
                       std::function<double(double)>([](double t) { return t * t; })}) {
          const auto r = change_of_variables_check(p, f, a, b);
          w.cvf = std::max(w.cvf, std::abs(r.lhs - r.rhs) / std::max(1.0, std::abs(r.rhs)));
        }
        w.inverse = std::max(w.inverse, right_inverse_defect(p, 200));
        const auto rep = scaling_check(p, R);
        w.L = std::max(w.L, rep.max_local_time_error / std::max(1.0, R * top));
        w.tau = std::max(w.tau, rep.max_tau_error);
        w.trace = std::max(w.trace, rep.max_trace_error);
      },
      [](Worst& a, Worst&& b) {
        a.cvf = std::max(a.cvf, b.cvf);
        a.inverse = std::max(a.inverse, b.inverse);
        a.L = std::max(a.L, b.L);
        a.tau = std::max(a.tau, b.tau);
        a.trace = std::max(a.trace, b.trace);
      });
  ctx.result.n = records;
  ctx.result.dt = params.dt;
  const double tol = ctx.tol("scaling.exact", 1e-12);
  ctx.add(check_below("identity.change_of_variables", worst.cvf, tol), records, params.dt);
  ctx.add(check_below("identity.tau_right_inverse", worst.inverse, tol), records, params.dt);
  ctx.add(check_below("identity.L^R=R*L", worst.L, tol), records, params.dt);
  ctx.add(check_below("identity.tau^R(t)=tau(t/R)", worst.tau, tol), records, params.dt);
  ctx.add(check_below("identity.Xhat^R=Xhat/R", worst.trace, tol), records, params.dt);
  detail::write_sample_paths(ctx, x0, T, field, domain, params);
}

}  // namespace experiments

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::vector<std::string> keys;  ///< experiment-specific keys (besides the common ones)
  std::function<void(ExperimentContext&)> run;
};

inline const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<std::string> boundary_keys{
      "boundary.s_max", "boundary.min_angle", "boundary.kernel_bins", "boundary.grid_ds", "boundary.batches",
      "levy.arc_a",     "levy.arc_b",         "spectral.modes",       "spectral.t_max",   "spectral.points",
      "probe.phi",      "probe.t",            "probe.bins",           "ref.n_max",        "ref.abel_r",
      "output.trace_samples"};
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  static const std::vector<ExperimentInfo> reg{
      {"hitting", "exit law of the absorbed diffusion against the Poisson kernel",
       {"start.x0", "hitting.bins"}, experiments::hitting},
      {"feynman-dirichlet", "E phi(X at exit) against a deterministic Dirichlet solve",
       {"start.x0", "data.phi", "data.expected", "ref.h"}, experiments::feynman_dirichlet},
      {"feynman-neumann", "E int f dL against the mean-zero co-normal solution, at T and T/2",
       {"start.x0", "data.phi", "data.expected", "ref.h"}, experiments::feynman_neumann},
      {"revuz", "Revuz identity |D|/t E int phi dL = int phi dsigma under a uniform start",
       {"data.phi"}, experiments::revuz},
      {"cauchy-kernel", "empirical jump kernel of the boundary process against the Levy kernel",
       with(boundary_keys, {"kernel.check_from"}), experiments::cauchy_kernel},
      {"generator", "binned (T_t phi - phi)/t against the DtN semigroup", boundary_keys, experiments::generator},
      {"spectral", "decay rates of E exp(i n (Xhat_t - Xhat_0)) against DtN eigenvalues", boundary_keys,
       experiments::spectral},
      {"levy-identity", "mean A->B jump count against t int_A int_B N / sigma", with(boundary_keys, {"levy.t"}),
       experiments::levy_identity},
      {"excursion-rate", "A->B excursion rate and the jump/excursion bijection", boundary_keys,
       experiments::excursion_rate},
      {"discriminate", "two conductivities told apart by spectral decay and kernel distance",
       with(boundary_keys, {"kappa2.family", "kappa2.value", "kappa2.profile_coeffs", "kappa2.collar",
                            "kappa2.bump.center", "kappa2.bump.width", "kappa2.bump.height", "sim.seed2"}),
       experiments::discriminate},
      {"dtn-reference", "DtN eigenvalues, Levy kernel table and the integro-differential residual",
       {"ref.n_max", "ref.abel_r", "ref.epsilon", "ref.scale_c", "ref.kernel_points", "data.phi"},
       experiments::dtn_reference},
      {"scaling", "exact discrete identities: change of variables, right inverse, scaling laws",
       {"start.x0", "scale.R", "scale.records"}, experiments::scaling},
  };
  return reg;
}

inline const ExperimentInfo& find_experiment(const std::string& name) {
  for (const auto& e : experiment_registry())
    if (e.name == name) return e;
  throw ConfigError("key 'experiment': unknown experiment '" + name + "' (see list-experiments)");
}

inline const std::vector<std::string>& common_keys() {
  static const std::vector<std::string> keys{
      "experiment",    "output.dir",   "sim.dt",         "sim.n_paths",          "sim.horizon",
      "sim.seed",      "sim.c_cal",    "sim.threads",    "sim.keep_paths",       "domain.kind",
      "domain.rho_coeffs", "kappa.family", "kappa.value", "kappa.profile_coeffs", "kappa.collar",
      "kappa.bump.center", "kappa.bump.width", "kappa.bump.height"};
  return keys;
}

/// Checks that the experiment exists, the seed is present, every key is known
/// and every block parses; throws ConfigError naming the offending key.
inline void validate_config(const Config& cfg) {
  const auto& info = find_experiment(cfg.get_string("experiment"));
  if (!cfg.has("sim.seed")) throw ConfigError("missing required key 'sim.seed' (no wall-clock default)");
  cfg.get_int("sim.seed");
  std::set<std::string> known(common_keys().begin(), common_keys().end());
  known.insert(info.keys.begin(), info.keys.end());
  for (const auto& [k, v] : cfg.entries())
    if (!known.count(k) && k.rfind("tol.", 0) != 0)
      throw ConfigError("unknown key '" + k + "' for experiment '" + info.name + "'");
  domain_from(cfg);
  field_from(cfg);
  if (cfg.has("kappa2.family")) field_from(cfg, "kappa2");
  sim_params_from(cfg, 1e-4);
  if (cfg.has("data.phi")) BoundarySpec::parse(cfg.get_string("data.phi"), "data.phi");
  if (cfg.has("start.x0")) get_point(cfg, "start.x0", "0, 0");
  if (std::find(info.keys.begin(), info.keys.end(), "probe.phi") != info.keys.end()) boundary_config_from(cfg);
  for (const auto& [k, v] : cfg.entries())
    if (k.rfind("tol.", 0) == 0) cfg.get_double(k);
  for (const char* k : {"sim.n_paths", "sim.threads", "sim.keep_paths", "hitting.bins", "ref.n_max", "scale.records"})
    if (cfg.has(k) && cfg.get_int(k) < 0) throw ConfigError(std::string("key '") + k + "' must be nonnegative");
}

inline void write_summary(const std::filesystem::path& path, const ExperimentResult& r) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# experiment: " << r.experiment << '\n';
  out << "# config_hash: " << r.config_hash << '\n';
  out << "# seed: " << r.seed << '\n';
  out << "# dt: " << format_number(r.dt) << '\n';
  out << "# n: " << r.n << '\n';
  out << "# runtime_s: " << format_number(r.runtime_s, 4) << '\n';
  out << "# status: " << to_string(r.overall()) << '\n';
  out << "name,value,reference,tolerance,verdict,seed,dt,n,config_hash\n";
  for (const auto& c : r.checks)
    out << c.name << ',' << format_number(c.value, 10) << ',' << format_number(c.reference, 10) << ",\""
        << c.tolerance << "\"," << to_string(c.verdict) << ',' << r.seed << ',' << format_number(c.dt) << ',' << c.n
        << ',' << r.config_hash << '\n';
}

/// Runs the configured experiment, writing artifacts and summary.txt into out_dir.
inline ExperimentResult run_experiment(const Config& cfg, const std::filesystem::path& out_dir, int threads) {
  validate_config(cfg);
  const auto& info = find_experiment(cfg.get_string("experiment"));
  std::filesystem::create_directories(out_dir);
  ExperimentResult result;
  result.experiment = info.name;
  result.seed = static_cast<std::uint64_t>(cfg.get_int("sim.seed"));
  result.config_hash = cfg.hash();
  RunSettings rs;
  rs.seed = result.seed;
  rs.threads = threads > 0 ? threads : static_cast<int>(cfg.get_int("sim.threads", 1));
  ExperimentContext ctx{cfg, out_dir, rs, result};
  const auto t0 = std::chrono::steady_clock::now();
  info.run(ctx);
  result.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_summary(out_dir / "summary.txt", result);
  result.artifacts.push_back("summary.txt");
  return result;
}

}  // namespace bdlab
