#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qkm/ansatz.hpp"
#include "qkm/dataset.hpp"
#include "qkm/schedule.hpp"

namespace qkm {

struct ExperimentConfig {
  std::optional<std::filesystem::path> data;  // CSV; synthetic data when absent
  std::size_t blobs = 2;
  double separation = 4.0;
  std::size_t features = 4;
  std::size_t per_class = 10;
  std::size_t layers = 1;    // r
  std::size_t distance = 1;  // d
  double gamma = 1.0;
  Strategy strategy = Strategy::no_messaging;
  std::size_t workers = 1;
  std::vector<double> c_values;  // defaults to c_grid()
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  bool gaussian = false;
  std::size_t samples = 8;
  std::filesystem::path out_dir = ".";

  FeatureMapConfig feature_map() const { return {features, layers, distance, gamma}; }
  void validate() const;
};

/// Reads a JSON object whose keys match the ExperimentConfig field names.
/// Unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Loaded (or generated), feature-selected, class-balanced rows before splitting.
Dataset load_balanced(const ExperimentConfig& config);

/// Writes the balanced dataset rescaled with its own extrema; returns the row count.
std::size_t cmd_preprocess(const ExperimentConfig& config, const std::filesystem::path& out_csv);

/// Train/test Gram CSVs with sidecars, plus metrics.json in out_dir.
void cmd_experiment(const ExperimentConfig& config);

/// Train/test Gram CSVs with sidecars only.
void cmd_gram(const ExperimentConfig& config);

/// Per-sample timing, bond dimension and memory series in benchmark.json.
void cmd_benchmark(const ExperimentConfig& config);

/// Parses `args` (without the program name) and dispatches. Returns the exit
/// code: 0 on success, 2 validation, 3 I/O, 4 non-convergence, 1 otherwise.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qkm
