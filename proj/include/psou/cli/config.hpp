#pragma once

// Experiment configuration for the batch front end. The schema is strict:
// unknown keys and dimension mismatches are rejected before any work starts.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psou/oup.hpp"
#include "psou/serialize.hpp"

namespace psou::cli {

struct RunParams {
  double horizon = 10.0;
  double grid_step = 0.1;
  long n_samples = 1000;
  std::uint64_t seed = 0;
  std::vector<double> lags;
  int batches = 20;
};

struct ExperimentConfig {
  std::optional<OUProcessSpec> model;
  RunParams run;
  std::string output_dir;
  /// Command-specific sections, validated by the command that consumes them.
  std::optional<Json> subordinator;
  std::optional<Json> probe;
  std::optional<Json> fit;
};

/// Parses and validates a configuration document.
ExperimentConfig parse_config(const Json& doc);
/// Reads `path` (kIo on failure) and parses it.
ExperimentConfig load_config(const std::string& path);

}  // namespace psou::cli
