#include "glemb/graph_weights.hpp"

#include <cmath>
#include <stdexcept>

namespace glemb {

namespace {

void check_labels(const DistanceMatrix& d2, const Labels& labels) {
  if (labels.size() != d2.size()) {
    throw std::invalid_argument("weight matrix: labels/distance size mismatch");
  }
}

}  // namespace

void LossConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("LossConfig: alpha must be > 0");
  if (!(tau > 0.0)) throw std::invalid_argument("LossConfig: tau must be > 0");
  if (!(beta >= 0.0)) throw std::invalid_argument("LossConfig: beta must be >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("LossConfig: lambda must be >= 0");
}

WeightMatrix contrastive_weights(const DistanceMatrix& d2, const Labels& labels,
                                 double alpha) {
  check_labels(d2, labels);
  if (!(alpha > 0.0)) throw std::invalid_argument("contrastive_weights: alpha must be > 0");
  const std::size_t n = d2.size();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (labels[i] == labels[j]) {
        s(i, j) = 1.0;
      } else if (alpha - d2(i, j) > 0.0) {
        s(i, j) = -1.0;
      }
    }
  }
  return WeightMatrix{std::move(s), WeightKind::contrastive, false};
}

WeightMatrix triplet_weights(const DistanceMatrix& d2, const Labels& labels,
                             double tau) {
  check_labels(d2, labels);
  if (!(tau > 0.0)) throw std::invalid_argument("triplet_weights: tau must be > 0");
  const std::size_t n = d2.size();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (labels[i] == labels[j]) {
        // anchor i, positive j: count active negatives
        int active = 0;
        for (std::size_t k = 0; k < n; ++k) {
          if (labels[k] == labels[i]) continue;
          if (d2(i, j) - d2(i, k) + tau > 0.0) ++active;
        }
        s(i, j) = static_cast<double>(active);
      } else {
        // anchor i, negative j: count active positives
        int active = 0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == i || labels[k] != labels[i]) continue;
          if (d2(i, k) - d2(i, j) + tau > 0.0) ++active;
        }
        s(i, j) = -static_cast<double>(active);
      }
    }
  }
  return WeightMatrix{std::move(s), WeightKind::triplet, false};
}

WeightMatrix row_normalize(const WeightMatrix& w) {
  WeightMatrix out = w;
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) sq += out.s(i, j) * out.s(i, j);
    if (sq == 0.0) continue;  // zero rows pass through
    const double norm = std::sqrt(sq);
    for (std::size_t j = 0; j < n; ++j) out.s(i, j) /= norm;
  }
  out.normalized = true;
  return out;
}

WeightMatrix combine(const WeightMatrix& s_t, const WeightMatrix& s_v,
                     double beta) {
  if (s_t.size() != s_v.size()) {
    throw std::invalid_argument("combine: weight matrix sizes differ");
  }
  WeightMatrix out;
  out.s = add_scaled(s_t.s, s_v.s, beta);
  out.kind = WeightKind::combined;
  out.normalized = false;
  return out;
}

WeightMatrix assemble_weights(const DistanceMatrix& d2, const Labels& labels,
                              const LossConfig& config, TrainMode mode) {
  config.validate();
  auto maybe_normalize = [&](WeightMatrix w) {
    return config.normalize_rows ? row_normalize(w) : w;
  };
  switch (mode) {
    case TrainMode::bgcl_only:
      return maybe_normalize(contrastive_weights(d2, labels, config.alpha));
    case TrainMode::bgtl_only:
      return maybe_normalize(triplet_weights(d2, labels, config.tau));
    case TrainMode::bgctl_only:
    case TrainMode::joint: {
      auto s_t = maybe_normalize(triplet_weights(d2, labels, config.tau));
      auto s_v = maybe_normalize(contrastive_weights(d2, labels, config.alpha));
      return combine(s_t, s_v, config.beta);
    }
    case TrainMode::softmax_only:
      break;
  }
  throw std::invalid_argument("assemble_weights: mode has no weight matrix");
}

}  // namespace glemb
