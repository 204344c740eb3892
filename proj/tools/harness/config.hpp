#pragma once

// Scenario configuration: a JSON document describing one experiment, an
// optional sweep axis, and the numerical knobs. Parsing reports the first bad
// field by its path (e.g. "holes[1].radius") so the CLI can exit with code 2.

#include "torsionlab/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace torsionlab::harness {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class Experiment { kIdentities, kStability, kCauchyStability, kShapeflow, kPoincare };

/// Which torsion field the identities/stability experiments use.
enum class FieldSource {
  /// Solve the Dirichlet problem on the domain.
  kDirichlet,
  /// Closed-form (|x|^2 - R^2)/4; requires an unperturbed disk.
  kRadial,
};

enum class SweepAxis { kHoleRadius, kEpsilon, kOuterRadius, kResolutionScale, kCauchyC };

struct SweepConfig {
  SweepAxis axis = SweepAxis::kEpsilon;
  std::vector<double> values;
};

struct Tolerances {
  double identity_rel_residual = 1e-8;
  double overdetermination = 1e-6;
  double shape_std_ratio = 1e-3;
  double volume_drift = 1e-5;
  double energy_monotonicity = 1e-9;
};

struct ScenarioConfig {
  Experiment experiment = Experiment::kIdentities;
  FieldSource field = FieldSource::kDirichlet;
  geometry::DomainSpec domain;

  int n_src = 128;
  double offset_ratio = 1.5;
  double tikhonov = 1e-10;

  int n_theta = 256;
  int n_r = 64;

  /// Cauchy experiments: u_nu = c on Gamma; holes are the carved source disks.
  double cauchy_c = 0.5;

  int n_samples = 10000;
  /// "sphere" or "john" regime for the tau exponents.
  std::string regime = "sphere";
  std::optional<double> theta;

  int max_iters = 200;
  int n_modes = 12;

  double poincare_r = 2.0;
  double poincare_p = 2.0;
  double poincare_alpha = 0.5;
  int poincare_fields = 20;

  std::optional<SweepConfig> sweep;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  Tolerances tolerances;
  /// Canonical JSON of the parsed document, echoed into report.json.
  std::string canonical;
};

std::string to_string(Experiment e);
std::string to_string(SweepAxis a);

/// Parses and validates; geometric invariants are checked through the
/// geometry module and reported under the "domain"/"holes" paths.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// The configuration with the sweep value applied (no-op without a sweep).
ScenarioConfig instance_config(const ScenarioConfig& base, double sweep_value);

}  // namespace torsionlab::harness
