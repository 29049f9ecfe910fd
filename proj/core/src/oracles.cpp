#include "glemb/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "glemb/laplacian_loss.hpp"

namespace glemb {
namespace oracles {

namespace {

// Distances here are deliberately expanded from scratch so the oracles stay
// independent of linalg::pairwise_sq_dist.
double sq_dist(const Matrix& h, std::size_t i, std::size_t j) {
  double acc = 0.0;
  for (std::size_t k = 0; k < h.rows(); ++k) {
    const double diff = h(k, i) - h(k, j);
    acc += diff * diff;
  }
  return acc;
}

double hinge(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

double naive_contrastive(const Matrix& h, const std::vector<LabeledPair>& pairs,
                         double alpha) {
  if (pairs.empty()) {
    throw std::invalid_argument("naive_contrastive: empty pair list");
  }
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double d2 = sq_dist(h, p.i, p.j);
    sum += p.same_identity ? d2 : hinge(alpha - d2);
  }
  return sum / static_cast<double>(pairs.size());
}

double naive_triplet(const Matrix& h, const Labels& labels,
                     const std::vector<TripletIndex>& triplets, double tau) {
  if (triplets.empty()) {
    throw std::invalid_argument("naive_triplet: empty triplet list");
  }
  double sum = 0.0;
  for (const auto& t : triplets) {
    if (t.anchor == t.positive || labels.at(t.anchor) != labels.at(t.positive) ||
        labels.at(t.anchor) == labels.at(t.negative)) {
      throw std::invalid_argument("naive_triplet: label constraint violated");
    }
    sum += hinge(sq_dist(h, t.anchor, t.positive) -
                 sq_dist(h, t.anchor, t.negative) + tau);
  }
  return sum / static_cast<double>(triplets.size());
}

double naive_batch_contrastive(const Matrix& h, const Labels& labels,
                               double alpha) {
  const std::size_t n = h.cols();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d2 = sq_dist(h, i, j);
      sum += labels[i] == labels[j] ? d2 : hinge(alpha - d2);
    }
  }
  return sum;
}

double naive_batch_triplet(const Matrix& h, const Labels& labels, double tau) {
  const std::size_t n = h.cols();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || labels[i] != labels[j]) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (labels[k] == labels[i]) continue;
        sum += hinge(sq_dist(h, i, j) - sq_dist(h, i, k) + tau);
      }
    }
  }
  return sum;
}

HingeConstants hinge_constants(const DistanceMatrix& d2, const Labels& labels,
                               double alpha, double tau) {
  if (labels.size() != d2.size()) {
    throw std::invalid_argument("hinge_constants: size mismatch");
  }
  const std::size_t n = d2.size();
  HingeConstants out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || labels[i] == labels[j]) continue;
      if (alpha - d2(i, j) > 0.0) ++out.active_negative_pairs;
    }
  }
  out.active_triplets = count_active_triplets(d2, labels, tau);
  out.contrastive_constant = alpha * static_cast<double>(out.active_negative_pairs);
  out.triplet_constant = tau * static_cast<double>(out.active_triplets);
  return out;
}

std::size_t count_active_triplets(const DistanceMatrix& d2, const Labels& labels,
                                  double tau) {
  if (labels.size() != d2.size()) {
    throw std::invalid_argument("count_active_triplets: size mismatch");
  }
  const std::size_t n = d2.size();
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || labels[i] != labels[j]) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (labels[k] == labels[i]) continue;
        if (d2(i, j) - d2(i, k) + tau > 0.0) ++count;
      }
    }
  }
  return count;
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f,
                        const Matrix& h, double eps) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("finite_diff_grad: eps must be > 0");
  }
  Matrix grad(h.rows(), h.cols());
  Matrix probe = h;
  for (std::size_t r = 0; r < h.rows(); ++r) {
    for (std::size_t c = 0; c < h.cols(); ++c) {
      const double saved = probe(r, c);
      probe(r, c) = saved + eps;
      const double up = f(probe);
      probe(r, c) = saved - eps;
      const double down = f(probe);
      probe(r, c) = saved;
      grad(r, c) = (up - down) / (2.0 * eps);
    }
  }
  return grad;
}

EquivalenceReport check_contrastive_equivalence(const Matrix& h,
                                                const Labels& labels,
                                                double alpha) {
  EquivalenceReport rep;
  rep.naive_value = naive_batch_contrastive(h, labels, alpha);
  const auto d2 = pairwise_sq_dist(h);
  const auto constants = hinge_constants(d2, labels, alpha, 1.0);
  const auto lap = build_laplacian(contrastive_weights(d2, labels, alpha));
  rep.laplacian_value = laplacian_loss(h, lap);
  rep.hinge_constant = constants.contrastive_constant;
  rep.active_count = constants.active_negative_pairs;
  rep.residual = std::abs(rep.naive_value - (rep.laplacian_value + rep.hinge_constant));
  return rep;
}

EquivalenceReport check_triplet_equivalence(const Matrix& h, const Labels& labels,
                                            double tau) {
  EquivalenceReport rep;
  rep.naive_value = naive_batch_triplet(h, labels, tau);
  const auto d2 = pairwise_sq_dist(h);
  const auto constants = hinge_constants(d2, labels, 1.0, tau);
  const auto lap = build_laplacian(triplet_weights(d2, labels, tau));
  rep.laplacian_value = laplacian_loss(h, lap);
  rep.hinge_constant = constants.triplet_constant;
  rep.active_count = constants.active_triplets;
  rep.residual = std::abs(rep.naive_value - (rep.laplacian_value + rep.hinge_constant));
  return rep;
}

RandomBatch random_batch(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> n_dist(2, 12);
  std::uniform_int_distribution<std::size_t> d_dist(2, 8);
  std::uniform_int_distribution<int> class_count_dist(1, 4);
  const std::size_t n = n_dist(rng);
  const std::size_t d = d_dist(rng);
  const int classes = class_count_dist(rng);
  std::uniform_int_distribution<int> label_dist(0, classes - 1);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  const double shrink = 1.0 / std::sqrt(static_cast<double>(d));

  RandomBatch batch{Matrix(d, n), Labels(n)};
  for (std::size_t j = 0; j < n; ++j) {
    batch.labels[j] = label_dist(rng);
    for (std::size_t i = 0; i < d; ++i) batch.h(i, j) = shrink * coord(rng);
  }
  return batch;
}

double min_hinge_margin(const Matrix& h, const Labels& labels, double alpha,
                        double tau) {
  const std::size_t n = h.cols();
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (labels[i] != labels[j]) {
        margin = std::min(margin, std::abs(alpha - sq_dist(h, i, j)));
        continue;
      }
      for (std::size_t k = 0; k < n; ++k) {
        if (labels[k] == labels[i]) continue;
        margin = std::min(
            margin, std::abs(sq_dist(h, i, j) - sq_dist(h, i, k) + tau));
      }
    }
  }
  return margin;
}

RandomBatch random_hinge_safe_batch(std::mt19937_64& rng, double alpha,
                                    double tau, double margin) {
  for (;;) {
    RandomBatch batch = random_batch(rng);
    bool multi_class = false;
    for (int label : batch.labels) {
      if (label != batch.labels.front()) {
        multi_class = true;
        break;
      }
    }
    if (!multi_class) continue;
    if (min_hinge_margin(batch.h, batch.labels, alpha, tau) >= margin) {
      return batch;
    }
  }
}

EquivalenceReport check_combined_equivalence(const Matrix& h, const Labels& labels,
                                             double alpha, double tau, double beta) {
  EquivalenceReport rep;
  rep.naive_value = naive_batch_triplet(h, labels, tau) +
                    beta * naive_batch_contrastive(h, labels, alpha);
  const auto d2 = pairwise_sq_dist(h);
  const auto constants = hinge_constants(d2, labels, alpha, tau);
  const auto combined = combine(triplet_weights(d2, labels, tau),
                                contrastive_weights(d2, labels, alpha), beta);
  rep.laplacian_value = laplacian_loss(h, build_laplacian(combined));
  rep.hinge_constant =
      constants.triplet_constant + beta * constants.contrastive_constant;
  rep.active_count = constants.active_triplets + constants.active_negative_pairs;
  rep.residual = std::abs(rep.naive_value - (rep.laplacian_value + rep.hinge_constant));
  return rep;
}

}  // namespace oracles
}  // namespace glemb
