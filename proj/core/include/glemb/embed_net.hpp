#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "glemb/graph_weights.hpp"
#include "glemb/linalg.hpp"

namespace glemb {

/// One dense layer: w is (out x in), b has out entries.
struct DenseLayer {
  Matrix w;
  std::vector<double> b;
};

/// Parameters of the embedding trunk plus the linear softmax head.
///
/// The trunk follows the layer rule x^(m) = relu(W^(m) x^(m-1)) + b^(m) for
/// hidden layers; the final trunk layer is affine with no activation, so the
/// embedding can occupy all orthants. The classifier maps embeddings to
/// per-identity logits.
struct EmbedNetParams {
  std::vector<DenseLayer> trunk;
  DenseLayer classifier;

  std::size_t input_dim() const { return trunk.front().w.cols(); }
  std::size_t embed_dim() const { return trunk.back().w.rows(); }
  std::size_t num_classes() const { return classifier.w.rows(); }

  /// Checks the dimension chain and finiteness; throws std::invalid_argument.
  void validate() const;

  bool operator==(const EmbedNetParams&) const;
};

/// Glorot-uniform initialization: weights uniform in [-s, s] with
/// s = sqrt(6 / (fan_in + fan_out)), biases zero. layer_dims runs from the
/// input dimension through the hidden sizes to the embedding dimension.
EmbedNetParams init_params(const std::vector<std::size_t>& layer_dims,
                           std::size_t num_classes, std::uint64_t seed);

/// Forward pass over a batch (inputs is d_in x N, samples as columns).
/// Keeps the per-layer inputs and pre-activations needed by the backward
/// pass.
struct ForwardResult {
  Matrix features;  ///< embed_dim x N, penultimate-layer output
  Matrix logits;    ///< num_classes x N

  std::vector<Matrix> layer_inputs;  // backward caches
  std::vector<Matrix> preacts;
};

ForwardResult forward(const EmbedNetParams& params, const Matrix& inputs);

/// Mean cross-entropy over the batch and its gradient with respect to the
/// logits, (softmax - onehot)/N. Stabilized by max subtraction.
/// Throws std::invalid_argument on an out-of-range label.
struct SoftmaxResult {
  double loss = 0.0;
  Matrix grad;
};

SoftmaxResult softmax_loss_and_grad(const Matrix& logits, const Labels& labels);

/// A labeled input vector with its camera-view tag (0 or 1).
struct LabeledSample {
  std::vector<double> input;
  int label = 0;
  int view = 0;
};

inline constexpr int kViewA = 0;
inline constexpr int kViewB = 1;

/// Identity-labeled samples spanning two views. Every identity must appear
/// with at least two samples covering both views (the pair-bundling sampler
/// depends on it).
struct LabeledDataset {
  std::vector<LabeledSample> samples;
  std::size_t num_classes = 0;
  std::size_t dim = 0;

  void validate() const;
};

/// A training batch: inputs d_in x N plus one identity label per column.
struct Batch {
  Matrix inputs;
  Labels labels;
};

/// Parameter gradients, same shapes as EmbedNetParams.
struct NetGradients {
  std::vector<DenseLayer> trunk;
  DenseLayer classifier;
};

/// Per-step diagnostics of the joint objective.
struct JointDiagnostics {
  double softmax_loss = 0.0;     ///< mean cross-entropy (reported in all modes)
  double laplacian_raw = 0.0;    ///< 2 tr(H psi H^T), unscaled
  double laplacian_term = 0.0;   ///< the contribution actually added to total
  double total_loss = 0.0;
  std::size_t active_negative_pairs = 0;
  std::size_t active_triplets = 0;
  double intra_mean = 0.0;  ///< mean same-identity feature distance
  double inter_mean = 0.0;  ///< mean different-identity feature distance
  double intra_inter_ratio = 0.0;
};

/// Full backward pass of the joint objective for one batch.
///
/// The softmax term participates in softmax_only and joint modes; the
/// graph-Laplacian term in everything but softmax_only, scaled by lambda in
/// joint mode and entering raw in the pure embedding modes. When
/// scale_by_batch is set the Laplacian loss and gradient are divided by the
/// batch size before the trade-off weight is applied. Weight matrices are
/// built from the current features and held fixed through the backward pass.
std::pair<NetGradients, JointDiagnostics> joint_backward(
    const EmbedNetParams& params, const Batch& batch, const LossConfig& config,
    TrainMode mode, bool scale_by_batch);

/// Value of the same objective without gradients: one full forward pass with
/// the weight matrices rebuilt from the resulting features. This is the
/// function the finite-difference checks perturb.
double joint_loss(const EmbedNetParams& params, const Batch& batch,
                  const LossConfig& config, TrainMode mode, bool scale_by_batch);

/// Binary checkpoint, little-endian:
///   magic "GLEMBNET", u32 version (1), u32 trunk layer count M,
///   u32 class count C, u32 dims[M+1] (input, hidden..., embedding),
///   then per trunk layer W row-major + b, then classifier W + b,
///   all as 64-bit IEEE doubles.
void save_checkpoint(const EmbedNetParams& params,
                     const std::filesystem::path& path);
EmbedNetParams load_checkpoint(const std::filesystem::path& path);

}  // namespace glemb
