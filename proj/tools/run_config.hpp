#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "glemb/trainer.hpp"

namespace glemb::cli {

struct EvalOptions {
  std::size_t trials = 20;
};

struct CheckOptions {
  std::size_t equivalence_instances = 200;
  std::size_t gradient_batches = 50;
  std::uint64_t seed = 20240601;
  std::string inject_fault;  // empty or "triplet-sign"
};

/// Everything a command can consume: defaults, overridden by a config file,
/// overridden again by command-line flags.
struct RunConfig {
  SynthConfig synth;
  TrainConfig train;
  EvalOptions eval;
  CheckOptions check;

  std::filesystem::path data_path;
  std::filesystem::path checkpoint_path;
  std::filesystem::path features_path;
  std::filesystem::path out_dir;
  bool dump_features = false;

  // gen-data and train refuse to run without an explicit seed
  bool synth_seed_set = false;
  bool train_seed_set = false;

  void set_seed(std::uint64_t seed);
};

/// Flat key=value file with [section] headers and '#' comments. Unknown
/// sections or keys raise std::runtime_error; see the README for the full
/// key table.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Serialize every resolved setting back into the same format.
std::string render_resolved_config(const RunConfig& config);

}  // namespace glemb::cli
