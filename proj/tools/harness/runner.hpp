#pragma once

// Executes a scenario (one instance for `run`, every sweep value for `sweep`)
// and collects report.json content plus flat tables. Instances run in a
// worker pool; results are gathered by instance index, so outputs do not
// depend on the thread count.

#include "harness/config.hpp"
#include "harness/table.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace torsionlab::harness {

enum class Mode { kRun, kSweep };

struct RunOptions {
  int threads = 1;
};

struct RunOutcome {
  nlohmann::json report;
  std::vector<Table> tables;
  /// Hard numeric assertion failures; the first one is the witness printed by the CLI.
  std::vector<std::string> failures;
  int exit_code() const { return failures.empty() ? 0 : 1; }
};

/// Throws ConfigError when `sweep` is requested without a sweep block.
RunOutcome execute(const ScenarioConfig& config, Mode mode, const RunOptions& options = {});

/// report.json, tables/<name>.csv and schema.json under dir (created if needed).
void write_outputs(const RunOutcome& outcome, const std::filesystem::path& dir);

}  // namespace torsionlab::harness
