#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "glemb/graph_weights.hpp"
#include "glemb/linalg.hpp"

namespace glemb {
namespace oracles {

// Brute-force reference implementations of every loss, written as plain
// scalar loops that share no code with the fast path (distances are expanded
// inline). They exist to verify the graph-Laplacian route, not to be fast.

/// A (i, j) pair with its same-identity flag.
struct LabeledPair {
  std::size_t i = 0;
  std::size_t j = 0;
  bool same_identity = false;
};

/// Anchor/positive/negative column indices into a batch.
struct TripletIndex {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
};

/// The additive constants dropped when hinge losses are rewritten as weighted
/// distance sums, plus the active-hinge counts behind them.
struct HingeConstants {
  double contrastive_constant = 0.0;  // alpha * active ordered negative pairs
  double triplet_constant = 0.0;      // tau * active triplets
  std::size_t active_negative_pairs = 0;
  std::size_t active_triplets = 0;
};

/// One naive-vs-Laplacian comparison: naive_value should equal
/// laplacian_value + hinge_constant up to the residual.
struct EquivalenceReport {
  double naive_value = 0.0;
  double laplacian_value = 0.0;
  double hinge_constant = 0.0;
  std::size_t active_count = 0;
  double residual = 0.0;
};

/// Mean contrastive loss over an explicit pair list:
/// (1/P) sum [eta * D^2 + (1 - eta) * max(alpha - D^2, 0)].
/// Throws std::invalid_argument on an empty list.
double naive_contrastive(const Matrix& h, const std::vector<LabeledPair>& pairs,
                         double alpha);

/// Mean triplet loss over an explicit triplet list:
/// (1/T) sum max(D^2(a,p) - D^2(a,n) + tau, 0).
/// Labels are used only to reject invalid triplets (anchor/positive labels
/// must match, anchor/negative must differ, anchor != positive).
double naive_triplet(const Matrix& h, const Labels& labels,
                     const std::vector<TripletIndex>& triplets, double tau);

/// Batch-global contrastive sum over all ordered pairs i != j, no 1/N factor.
double naive_batch_contrastive(const Matrix& h, const Labels& labels,
                               double alpha);

/// Batch-global triplet sum over all (i, j, k) with
/// labels[i] == labels[j] != labels[k], i != j. No 1/N factor.
double naive_batch_triplet(const Matrix& h, const Labels& labels, double tau);

/// Constants that make the naive batch sums equal the weighted distance sums
/// exactly (unnormalized weights).
HingeConstants hinge_constants(const DistanceMatrix& d2, const Labels& labels,
                               double alpha, double tau);

/// Number of triplets (i, j, k) with labels[i] == labels[j] != labels[k],
/// i != j, and d2[i][j] - d2[i][k] + tau strictly positive.
std::size_t count_active_triplets(const DistanceMatrix& d2, const Labels& labels,
                                  double tau);

/// Central finite differences of f at h, entrywise:
/// (f(h + eps e) - f(h - eps e)) / (2 eps). f must recompute everything it
/// depends on (weights included) at each perturbed input.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f,
                        const Matrix& h, double eps);

/// Run the naive batch-contrastive sum against the Laplacian form built from
/// unnormalized contrastive weights plus its hinge constant.
EquivalenceReport check_contrastive_equivalence(const Matrix& h,
                                                const Labels& labels,
                                                double alpha);

/// Same comparison for the batch-global triplet loss.
EquivalenceReport check_triplet_equivalence(const Matrix& h, const Labels& labels,
                                            double tau);

/// Combined check: naive R^t + beta * R^v against the Laplacian form of
/// S^t + beta * S^v (unnormalized) plus both constants.
EquivalenceReport check_combined_equivalence(const Matrix& h, const Labels& labels,
                                             double alpha, double tau, double beta);

/// A feature batch with identity labels, as produced by the random-instance
/// generators below.
struct RandomBatch {
  Matrix h;
  Labels labels;
};

/// Random labeled batch: N in [2, 12] columns, d in [2, 8] rows, 1 to 4
/// identities, coordinates inside the unit ball.
RandomBatch random_batch(std::mt19937_64& rng);

/// Smallest magnitude over every hinge argument the weight matrices inspect:
/// alpha - d2[i][j] for inter-class pairs and d2[i][j] - d2[i][k] + tau for
/// candidate triplets. Infinity when no argument exists.
double min_hinge_margin(const Matrix& h, const Labels& labels, double alpha,
                        double tau);

/// Rejection-sample batches until every hinge argument is at least `margin`
/// away from zero and at least two identities are present, so finite
/// differences cannot flip an indicator.
RandomBatch random_hinge_safe_batch(std::mt19937_64& rng, double alpha,
                                    double tau, double margin);

}  // namespace oracles
}  // namespace glemb
