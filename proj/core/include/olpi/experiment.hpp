#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace olpi {

enum class Domain { mda, drone, multi_drone, custom_enumerable };
enum class Variant { standard, simplified, multiagent, multiagent_permuted };
enum class GeneratorKind { tabular, residual };

// One experiment: a domain instance, an on-line PI variant, a generator, and
// the run parameters. The MDA domain pairs with the tabular generator and the
// drone domains with the residual generator; other combinations are rejected.
struct ExperimentConfig {
  Domain domain = Domain::mda;
  Variant variant = Variant::standard;
  GeneratorKind generator = GeneratorKind::tabular;
  int iterations = 10;
  std::uint64_t seed = 0;
  double tie_tol = 0.0;
  bool allow_inconsistent = false;
  nlohmann::json params;  // domain-specific block
  std::string output_dir = "run";

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct RunResult {
  std::filesystem::path dir;
  std::vector<double> costs;
  bool monotone = true;
  bool halted_fixed_point = false;
  bool consistency_all_ok = true;
  int exit_status = 0;
};

// Runs the experiment and writes history.csv, costs.csv, per-iteration
// trajectory files, the domain results CSV, and metadata.json into the
// resolved output directory. Throws ConfigError on a bad config and
// ConsistencyError on a violation unless allow_inconsistent is set.
RunResult run_experiment(const ExperimentConfig& config);

// The bundled five-node graph demonstration: the consistent replay generator
// reaches the optimum in one improvement and fixes there. With
// allow_inconsistent the deliberately inconsistent generator runs as well and
// its improvement violation is recorded in the metadata.
RunResult run_demo_fig1(bool allow_inconsistent, const std::filesystem::path& out_dir);

// Output root: $OLPI_OUTPUT_ROOT if set, else the current directory.
std::filesystem::path default_output_root();

// Locates a bundled config/scenario file: tries the path itself, then
// $OLPI_CONFIG_DIR, then the source and installed config directories.
std::filesystem::path find_config_file(const std::string& name);

// FNV-1a hash of the canonical config dump; recorded in run metadata.
std::string config_hash(const nlohmann::json& j);

}  // namespace olpi
