// torsionlab: run, sweep or validate a scenario configuration.
//
// Exit codes: 0 all hard assertions passed, 1 numeric assertion failure
// (first witness on stderr), 2 configuration error (field path on stderr).

#include "harness/config.hpp"
#include "harness/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using namespace torsionlab::harness;

int execute_command(const std::string& path, std::optional<Mode> mode, const std::string& out_dir,
                    int threads, std::optional<std::uint64_t> seed) {
  ScenarioConfig cfg;
  try {
    cfg = load_config(path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!mode) {
      std::cout << "ok: " << to_string(cfg.experiment) << " scenario";
      if (cfg.sweep) std::cout << ", sweep over " << to_string(cfg.sweep->axis) << " (" << cfg.sweep->values.size() << " values)";
      std::cout << "\n";
      return 0;
    }
    const RunOutcome outcome = execute(cfg, *mode, RunOptions{threads});
    write_outputs(outcome, cfg.output_dir);
    if (outcome.exit_code() != 0) {
      std::cerr << "FAIL: " << outcome.failures.front() << "\n";
      if (outcome.failures.size() > 1) std::cerr << "(" << outcome.failures.size() - 1 << " more in report.json)\n";
    } else {
      std::cout << "PASS: " << outcome.tables.size() << " tables written to " << cfg.output_dir.string() << "\n";
    }
    return outcome.exit_code();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"torsionlab: numerical experiments for the torsion problem on domains with holes"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  app.add_option("--out", out_dir, "Output directory (overrides output_dir in the config)");
  app.add_option("--threads", threads, "Worker threads for sweeps")->check(CLI::Range(1, 256));
  app.add_option("--seed", seed, "Random seed (overrides seed in the config)");

  std::string config;
  auto* run = app.add_subcommand("run", "Run the base instance of a scenario");
  run->add_option("config", config, "Scenario JSON file")->required();
  auto* sweep = app.add_subcommand("sweep", "Run every value of the scenario's sweep axis");
  sweep->add_option("config", config, "Scenario JSON file")->required();
  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario without running it");
  validate->add_option("config", config, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  std::optional<Mode> mode;
  if (*run) mode = Mode::kRun;
  if (*sweep) mode = Mode::kSweep;
  return execute_command(config, mode, out_dir, threads, seed);
}
