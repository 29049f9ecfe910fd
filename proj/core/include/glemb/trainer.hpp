#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "glemb/embed_net.hpp"
#include "glemb/graph_weights.hpp"

namespace glemb {

/// Step-decay schedule: rate(t) = base * factor^floor(t / interval).
/// interval == 0 keeps the rate constant.
struct LearningRateSchedule {
  double base = 0.005;
  double decay_factor = 0.5;
  std::size_t decay_interval = 60;

  double at(std::size_t iteration) const;
};

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 64;  ///< even, >= 4
  LearningRateSchedule lr;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  LossConfig loss;
  TrainMode mode = TrainMode::joint;
  bool scale_by_batch = true;
  std::vector<std::size_t> hidden_dims = {32};
  std::size_t embed_dim = 16;

  void validate() const;
};

/// Synthetic identity-cluster generator settings. Each identity is a cluster
/// center; each sample is center + a per-view offset + isotropic noise. The
/// view offset stands in for the camera change between the two views.
struct SynthConfig {
  std::size_t num_identities = 32;
  std::size_t samples_per_view = 4;
  std::size_t dim = 16;
  double center_scale = 2.0;
  double noise_scale = 1.0;
  double view_offset_scale = 2.0;
  std::uint64_t seed = 1;

  void validate() const;
};

LabeledDataset gen_synth(const SynthConfig& config);

/// Draw one batch as a shuffled concatenation of (same-identity,
/// different-view) bundles of size 2. Whenever the dataset holds more than
/// one identity, so does every batch. Throws if the dataset cannot fill one
/// batch.
Batch sample_batch(const LabeledDataset& dataset, std::size_t batch_size,
                   std::mt19937_64& rng);

struct IterationRecord {
  std::size_t iteration = 0;
  double softmax_loss = 0.0;
  double laplacian_loss = 0.0;
  double total_loss = 0.0;
  std::size_t active_pairs = 0;
  std::size_t active_triplets = 0;
  double intra_inter_ratio = 0.0;
};

/// Raised when the training loss stops being finite. Carries the log written
/// so far so callers can keep the partial trace.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string message, std::vector<IterationRecord> partial_log)
      : std::runtime_error(std::move(message)), log(std::move(partial_log)) {}

  std::vector<IterationRecord> log;
};

struct TrainResult {
  EmbedNetParams params;
  std::vector<IterationRecord> log;
};

/// SGD-with-momentum training over bundled batches: per iteration the batch
/// weight matrices and Laplacian are rebuilt from the current features, the
/// joint gradient is backpropagated, and parameters are updated in place.
/// Deterministic for a given (dataset, config).
TrainResult train(const LabeledDataset& dataset, const TrainConfig& config);

/// Dataset file: '#'-prefixed header lines, then a CSV column header and one
/// row per sample: id, view (A/B), then the feature values.
void save_dataset_csv(const LabeledDataset& dataset,
                      const std::filesystem::path& path);
LabeledDataset load_dataset_csv(const std::filesystem::path& path);

/// One CSV row per training iteration.
void write_train_log_csv(const std::vector<IterationRecord>& log,
                         const std::filesystem::path& path);

const char* mode_name(TrainMode mode);
TrainMode parse_mode(const std::string& name);  ///< throws on unknown name

}  // namespace glemb
