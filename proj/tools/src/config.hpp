#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmfg/game.hpp"
#include "hmfg/hypergraph.hpp"
#include "hmfg/kernels.hpp"

namespace hmfg::cli {

inline constexpr int kConfigVersion = 1;

/// A bad config. `path` is a JSON pointer into the offending document.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string kind, const std::string& message, std::string path = "")
      : std::runtime_error(message), kind_(std::move(kind)), path_(std::move(path)) {}
  const std::string& kind() const { return kind_; }
  const std::string& path() const { return path_; }

 private:
  std::string kind_;
  std::string path_;
};

struct LayerSpec {
  std::string name;
  KernelParams params;
};

struct GridSpec {
  int resolution = 50;
  MarginalMode marginal_mode = MarginalMode::analytic;
  std::size_t marginal_samples = 4096;
  std::uint64_t marginal_seed = 0;
};

enum class SolverMethod { fixed_point, omd };

struct SolverSpec {
  SolverMethod method = SolverMethod::fixed_point;
  int iterations = 200;
  double damping = 0.0;
  double tolerance = 1e-10;
  double learning_rate = 1.0;
  double temperature = 1.0;
};

struct SimulationSpec {
  std::vector<int> sizes{16, 64, 256};
  int realizations = 20;
  std::uint64_t seed = 0;
  AlphaMode alpha_mode = AlphaMode::grid;
  /// Directory holding policy.csv and mean_field.csv of a finished solve;
  /// empty means solve first.
  std::string equilibrium;
};

struct SampleSpec {
  int vertices = 60;
  std::uint64_t seed = 0;
  AlphaMode alpha_mode = AlphaMode::uniform;
};

enum class ProblemKind { rumor, sis };

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::rumor;
  RumorParams rumor;
  SisParams sis;
  std::vector<LayerSpec> layers;
  GridSpec grid;
  SolverSpec solver;
  SimulationSpec simulation;
  SampleSpec sample;
  std::string output_dir = "out";
};

/// Parses and validates a config document. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
/// Reads a file, parses JSON and validates. Throws ConfigError.
ExperimentConfig load_config(const std::string& path);

/// The fully resolved config (every default filled in), loadable again.
nlohmann::json to_json(const ExperimentConfig& config);

MultiLayerHypergraphon build_hypergraphon(const ExperimentConfig& config);
MfgProblem build_problem(const ExperimentConfig& config);

const char* to_string(AlphaMode mode);
const char* to_string(SolverMethod method);
const char* to_string(ProblemKind kind);

}  // namespace hmfg::cli
