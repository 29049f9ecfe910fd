#pragma once

#include <cstddef>
#include <vector>

#include "glemb/linalg.hpp"

namespace glemb {

/// Identity label per batch column.
using Labels = std::vector<int>;

enum class WeightKind { contrastive, triplet, combined };

/// Signed edge weights of the complete batch graph. Positive entries pull a
/// pair together, negative entries push it apart. The diagonal is always
/// zero. `normalized` is set once each row has been L2-normalized; combined
/// matrices are sums of normalized parts and do not carry the flag.
struct WeightMatrix {
  Matrix s;
  WeightKind kind = WeightKind::contrastive;
  bool normalized = false;

  std::size_t size() const { return s.rows(); }
};

/// Margins and trade-off weights of the loss assembly.
/// Defaults are the operating point used throughout: alpha = tau = 1.0,
/// lambda = 0.6, beta = 0.1.
struct LossConfig {
  double alpha = 1.0;   ///< contrastive margin, > 0
  double tau = 1.0;     ///< triplet margin, > 0
  double beta = 0.1;    ///< contrastive weight in the combined matrix, >= 0
  double lambda = 0.6;  ///< embedding-loss weight in the joint objective, >= 0
  bool normalize_rows = true;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Which loss terms drive training. The pure-embedding modes (bgcl, bgtl,
/// bgctl) train on the weighted-graph loss alone; joint adds it to the
/// softmax term scaled by lambda.
enum class TrainMode { softmax_only, bgcl_only, bgtl_only, bgctl_only, joint };

/// Batch-global contrastive weights. For i != j:
///   s[i][j] =  1                 if labels match,
///   s[i][j] = -1                 if labels differ and alpha - d2[i][j] > 0,
///   s[i][j] =  0                 otherwise.
/// The hinge indicator is strict: an argument of exactly zero contributes
/// nothing. Throws on label/matrix size mismatch or alpha <= 0.
WeightMatrix contrastive_weights(const DistanceMatrix& d2, const Labels& labels,
                                 double alpha);

/// Batch-global triplet weights. For a same-label pair (i != j), s[i][j]
/// counts negatives k (labels[k] != labels[i]) with
/// d2[i][j] - d2[i][k] + tau > 0. For a different-label pair, s[i][j] is
/// minus the count of positives k (labels[k] == labels[i], k != i) with
/// d2[i][k] - d2[i][j] + tau > 0. Strict indicator, zero diagonal.
WeightMatrix triplet_weights(const DistanceMatrix& d2, const Labels& labels,
                             double tau);

/// Divide each row by its Euclidean norm; all-zero rows pass through
/// unchanged. Sets the normalized flag.
WeightMatrix row_normalize(const WeightMatrix& w);

/// s_t + beta * s_v, kind = combined. Normalization (when requested) happens
/// per input matrix before this call.
WeightMatrix combine(const WeightMatrix& s_t, const WeightMatrix& s_v,
                     double beta);

/// Build the weight matrix a training mode uses: only S^v for bgcl, only S^t
/// for bgtl, and the beta-combination for bgctl/joint, each row-normalized
/// first when config.normalize_rows is set.
/// Throws std::invalid_argument for mode == softmax_only.
WeightMatrix assemble_weights(const DistanceMatrix& d2, const Labels& labels,
                              const LossConfig& config, TrainMode mode);

}  // namespace glemb
