#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "glemb/oracles.hpp"

using namespace glemb;
using namespace glemb::oracles;

namespace {

const Matrix kFarBatch(2, 4, {0, 0, 3, 3, 0, 1, 0, 1});
const Matrix kCloseBatch(2, 4, {0, 0, 1, 1, 0, 1, 0, 1});
const Labels kTwoClasses{0, 0, 1, 1};

Matrix coincident(std::size_t n) {
  Matrix h(2, n);
  for (std::size_t j = 0; j < n; ++j) h(0, j) = h(1, j) = -0.5;
  return h;
}

}  // namespace

TEST_CASE("naive contrastive hand cases") {
  // one positive pair at distance 1
  const Matrix pos(1, 2, {0.0, 1.0});
  CHECK(naive_contrastive(pos, {{0, 1, true}}, 1.0) == 1.0);
  // one negative pair at squared distance 9: hinge inactive
  const Matrix neg(1, 2, {0.0, 3.0});
  CHECK(naive_contrastive(neg, {{0, 1, false}}, 1.0) == 0.0);
  // coincident negative pair pays the full margin
  const Matrix same(1, 2, {2.0, 2.0});
  CHECK(naive_contrastive(same, {{0, 1, false}}, 1.0) == 1.0);
  CHECK_THROWS_AS(naive_contrastive(pos, {}, 1.0), std::invalid_argument);
}

TEST_CASE("naive triplet hand cases") {
  // anchor 0, positive 1 coincident, negative 2 far: loss 0
  const Matrix easy(1, 3, {0.0, 0.0, 3.0});
  const Labels l{0, 0, 1};
  CHECK(naive_triplet(easy, l, {{0, 1, 2}}, 1.0) == 0.0);
  // equal distances: hinge pays exactly tau
  const Matrix tie(2, 3, {0, 0, 1, 0, 1, 0});
  CHECK(naive_triplet(tie, l, {{0, 1, 2}}, 1.0) == 1.0);
  // all 8 candidate triplets of the close batch average to 1/2
  std::vector<TripletIndex> all;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (i == j || kTwoClasses[i] != kTwoClasses[j]) continue;
      for (std::size_t k = 0; k < 4; ++k) {
        if (kTwoClasses[k] != kTwoClasses[i]) all.push_back({i, j, k});
      }
    }
  }
  CHECK(all.size() == 8);
  CHECK(naive_triplet(kCloseBatch, kTwoClasses, all, 1.0) == 0.5);
  // label constraints are enforced
  CHECK_THROWS_AS(naive_triplet(easy, l, {{0, 2, 1}}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(naive_triplet(easy, l, {{0, 0, 2}}, 1.0), std::invalid_argument);
}

TEST_CASE("naive batch contrastive hand cases") {
  CHECK(naive_batch_contrastive(kFarBatch, kTwoClasses, 1.0) == 4.0);
  // all coincident, 2 classes of 2: 8 ordered inter-class pairs pay alpha
  CHECK(naive_batch_contrastive(coincident(4), kTwoClasses, 1.0) == 8.0);
  // single identity: plain sum of ordered positive squared distances
  const Matrix h(1, 3, {0.0, 1.0, 3.0});
  CHECK(naive_batch_contrastive(h, Labels{5, 5, 5}, 1.0) ==
        doctest::Approx(2.0 * (1.0 + 9.0 + 4.0)));
}

TEST_CASE("naive batch triplet hand cases") {
  CHECK(naive_batch_triplet(kCloseBatch, Labels{0, 0, 0, 0}, 1.0) == 0.0);
  CHECK(naive_batch_triplet(kCloseBatch, kTwoClasses, 1.0) == 4.0);
  const Labels three_ids{0, 0, 1, 1, 2, 2};
  CHECK(naive_batch_triplet(coincident(6), three_ids, 1.0) == 24.0);
}

TEST_CASE("hinge constants") {
  const auto far = hinge_constants(pairwise_sq_dist(kFarBatch), kTwoClasses, 1.0, 1.0);
  CHECK(far.contrastive_constant == 0.0);
  CHECK(far.triplet_constant == 0.0);
  CHECK(far.active_negative_pairs == 0);
  CHECK(far.active_triplets == 0);

  const auto close = hinge_constants(pairwise_sq_dist(kCloseBatch), kTwoClasses, 1.0, 1.0);
  CHECK(close.triplet_constant == 4.0);
  CHECK(close.active_triplets == 4);

  const Labels three_ids{0, 0, 1, 1, 2, 2};
  const auto dense = hinge_constants(pairwise_sq_dist(coincident(6)), three_ids, 1.0, 1.0);
  CHECK(dense.active_triplets == 24);
}

TEST_CASE("count_active_triplets") {
  const Labels three_ids{0, 0, 1, 1, 2, 2};
  CHECK(count_active_triplets(pairwise_sq_dist(coincident(6)), three_ids, 1.0) == 24);
  CHECK(count_active_triplets(pairwise_sq_dist(kFarBatch), kTwoClasses, 1.0) == 0);
  CHECK(count_active_triplets(pairwise_sq_dist(kCloseBatch), Labels{3, 3, 3, 3}, 1.0) == 0);
}

TEST_CASE("coincident P x K batches activate every candidate triplet") {
  for (std::size_t p : {2, 3, 4}) {
    for (std::size_t k : {2, 3}) {
      const std::size_t n = p * k;
      Labels labels(n);
      for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i / k);
      const auto count = count_active_triplets(pairwise_sq_dist(coincident(n)), labels, 1.0);
      CHECK(count == p * k * (k - 1) * (p - 1) * k);
    }
  }
}

TEST_CASE("finite differences of a known quadratic") {
  const Matrix h(2, 3, {1, -2, 0.5, 3, 0.25, -1});
  auto sum_sq = [](const Matrix& m) {
    double acc = 0.0;
    for (double x : m.data()) acc += x * x;
    return acc;
  };
  const Matrix fd = finite_diff_grad(sum_sq, h, 1e-6);
  for (std::size_t i = 0; i < h.size(); ++i) {
    CHECK(std::abs(fd.data()[i] - 2.0 * h.data()[i]) < 1e-6);
  }
  const Matrix zero = finite_diff_grad([](const Matrix&) { return 7.0; }, h, 1e-6);
  for (double x : zero.data()) CHECK(x == 0.0);
  CHECK_THROWS_AS(finite_diff_grad(sum_sq, h, 0.0), std::invalid_argument);
}

TEST_CASE("contrastive equivalence over random batches") {
  std::mt19937_64 rng(101);
  for (int rep = 0; rep < 120; ++rep) {
    const auto batch = random_batch(rng);
    const auto rep_out = check_contrastive_equivalence(batch.h, batch.labels, 1.0);
    CHECK(rep_out.residual <= 1e-9);
    CHECK(rep_out.residual ==
          std::abs(rep_out.naive_value -
                   (rep_out.laplacian_value + rep_out.hinge_constant)));
  }
}

TEST_CASE("triplet equivalence over random batches") {
  std::mt19937_64 rng(103);
  for (int rep = 0; rep < 120; ++rep) {
    const auto batch = random_batch(rng);
    CHECK(check_triplet_equivalence(batch.h, batch.labels, 1.0).residual <= 1e-9);
  }
}

TEST_CASE("combined equivalence over random batches") {
  std::mt19937_64 rng(107);
  for (int rep = 0; rep < 120; ++rep) {
    const auto batch = random_batch(rng);
    CHECK(check_combined_equivalence(batch.h, batch.labels, 1.0, 1.0, 0.1).residual <=
          1e-9);
  }
}

TEST_CASE("hinge-safe generator honors its margin") {
  std::mt19937_64 rng(109);
  for (int rep = 0; rep < 20; ++rep) {
    const auto batch = random_hinge_safe_batch(rng, 1.0, 1.0, 1e-3);
    CHECK(min_hinge_margin(batch.h, batch.labels, 1.0, 1.0) >= 1e-3);
    bool multi = false;
    for (int l : batch.labels) multi |= l != batch.labels.front();
    CHECK(multi);
  }
}
