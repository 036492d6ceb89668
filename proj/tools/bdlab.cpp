// bdlab command-line driver.
//
// Exit status: 0 when every check passes or is inconclusive, 1 when a check
// fails, 2 on usage or configuration errors, 3 when an estimator or solver
// raises.

#include "bdlab/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

bdlab::Config load_with_overrides(const std::string& path, const std::vector<std::string>& overrides,
                                  const std::optional<std::uint64_t>& seed) {
  auto cfg = bdlab::Config::load(path);
  for (const auto& kv : overrides) cfg.apply_override(kv);
  if (seed) cfg.set("sim.seed", std::to_string(*seed));
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary diffusion laboratory: Monte Carlo experiments with deterministic references"};
  app.require_subcommand(1);

  std::string out_dir;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  app.add_option("--out", out_dir, "output directory (default: output.dir key, else ./out/<experiment>)");
  app.add_option("--threads", threads, "worker threads (default: sim.threads key, else 1)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "override sim.seed");

  std::string config_path;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("overrides", overrides, "key=value overrides");

  auto* list = app.add_subcommand("list-experiments", "list experiments and their keys");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  validate->add_option("overrides", overrides, "key=value overrides");

  // Flags are accepted before or after the subcommand.
  for (auto* sub : {run, validate}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    for (const auto& e : bdlab::experiment_registry()) {
      std::cout << e.name << "\n    " << e.description << "\n    keys:";
      for (const auto& k : e.keys) std::cout << ' ' << k;
      std::cout << '\n';
    }
    return 0;
  }

  bdlab::Config cfg;
  try {
    cfg = load_with_overrides(config_path, overrides, seed);
    bdlab::validate_config(cfg);
  } catch (const bdlab::Error& e) {
    std::cerr << "bdlab: config error: " << e.what() << '\n';
    return 2;
  }

  if (validate->parsed()) {
    std::cout << "ok: " << cfg.get_string("experiment") << " (config hash " << cfg.hash() << ")\n";
    return 0;
  }

  if (out_dir.empty()) out_dir = cfg.get_string("output.dir", "out/" + cfg.get_string("experiment"));
  try {
    const auto result = bdlab::run_experiment(cfg, out_dir, threads);
    for (const auto& c : result.checks)
      std::cout << bdlab::to_string(c.verdict) << "  " << c.name << " = " << bdlab::format_number(c.value, 8)
                << "  (reference " << bdlab::format_number(c.reference, 8) << ", " << c.tolerance << ")\n";
    std::cout << "status: " << bdlab::to_string(result.overall()) << "  runtime " << bdlab::format_number(result.runtime_s, 4)
              << " s  artifacts in " << out_dir << '\n';
    return result.overall() == bdlab::Verdict::Fail ? 1 : 0;
  } catch (const bdlab::ConfigError& e) {
    std::cerr << "bdlab: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bdlab: " << e.what() << '\n';
    return 3;
  }
}
