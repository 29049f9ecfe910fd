#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "glemb/linalg.hpp"

using namespace glemb;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = dist(rng);
  return m;
}

// independent reference product, plain index arithmetic
Matrix loop_mat_mul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t k = 0; k < a.cols(); ++k) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out(i, j) += a(i, k) * b(k, j);
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("matrix construction validates shape and finiteness") {
  CHECK_THROWS_AS(Matrix(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(Matrix(1, 2, {1.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(Matrix(1, 1, {INFINITY}), std::invalid_argument);
  const Matrix m(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m(1, 2) == 6.0);
}

TEST_CASE("pairwise_sq_dist unit separation") {
  // columns (0,0) and (0,1)
  const Matrix h(2, 2, {0, 0, 0, 1});
  const auto d2 = pairwise_sq_dist(h);
  CHECK(d2(0, 1) == 1.0);
  CHECK(d2(1, 0) == 1.0);
  CHECK(d2(0, 0) == 0.0);
  CHECK(d2(1, 1) == 0.0);
}

TEST_CASE("pairwise_sq_dist coincident points") {
  const Matrix h(3, 2, {1, 1, -2, -2, 0.5, 0.5});
  const auto d2 = pairwise_sq_dist(h);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) CHECK(d2(i, j) == 0.0);
  }
}

TEST_CASE("pairwise_sq_dist four point batch") {
  // x1=(0,0) x2=(0,1) x3=(3,0) x4=(3,1); values confirmed by scalar loop below
  const Matrix h(2, 4, {0, 0, 3, 3, 0, 1, 0, 1});
  const auto d2 = pairwise_sq_dist(h);
  CHECK(d2(0, 1) == 1.0);
  CHECK(d2(0, 2) == 9.0);
  CHECK(d2(0, 3) == 10.0);
  CHECK(d2(1, 2) == 10.0);
  CHECK(d2(1, 3) == 9.0);
  CHECK(d2(2, 3) == 1.0);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 2; ++k) {
        acc += (h(k, i) - h(k, j)) * (h(k, i) - h(k, j));
      }
      CHECK(d2(i, j) == doctest::Approx(acc).epsilon(1e-15));
    }
  }
}

TEST_CASE("pairwise_sq_dist is symmetric, zero-diagonal, nonnegative") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    std::uniform_int_distribution<std::size_t> dims(1, 9);
    const Matrix h = random_matrix(rng, dims(rng), dims(rng));
    const auto d2 = pairwise_sq_dist(h);
    for (std::size_t i = 0; i < h.cols(); ++i) {
      CHECK(d2(i, i) == 0.0);
      for (std::size_t j = 0; j < h.cols(); ++j) {
        CHECK(d2(i, j) == d2(j, i));  // exact, mirrored on construction
        CHECK(d2(i, j) >= 0.0);
      }
    }
  }
}

TEST_CASE("pairwise_sq_dist rejects non-finite input") {
  Matrix h(2, 2);
  h(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(pairwise_sq_dist(h), std::invalid_argument);
}

TEST_CASE("mat_mul identity and scalar cases") {
  std::mt19937_64 rng(3);
  const Matrix a = random_matrix(rng, 4, 4);
  const Matrix prod = mat_mul(Matrix::identity(4), a);
  CHECK(prod == a);
  const Matrix two(1, 1, {2.0});
  const Matrix three(1, 1, {3.0});
  CHECK(mat_mul(two, three)(0, 0) == 6.0);
}

TEST_CASE("mat_mul dimension mismatch") {
  CHECK_THROWS_AS(mat_mul(Matrix(2, 3), Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("mat_mul matches triple-loop oracle") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 40; ++rep) {
    std::uniform_int_distribution<std::size_t> dims(1, 16);
    const std::size_t m = dims(rng), k = dims(rng), n = dims(rng);
    const Matrix a = random_matrix(rng, m, k);
    const Matrix b = random_matrix(rng, k, n);
    const Matrix got = mat_mul(a, b);
    const Matrix want = loop_mat_mul(a, b);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("trace_quadratic zero and identity weights") {
  std::mt19937_64 rng(5);
  const Matrix h = random_matrix(rng, 3, 5);
  CHECK(trace_quadratic(h, Matrix(5, 5)) == 0.0);
  double gram = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    for (std::size_t i = 0; i < 3; ++i) gram += h(i, j) * h(i, j);
  }
  CHECK(trace_quadratic(h, Matrix::identity(5)) == doctest::Approx(gram).epsilon(1e-12));
}

TEST_CASE("trace_quadratic matches diagonal-sum oracle") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 30; ++rep) {
    const Matrix h = random_matrix(rng, 2, 3);
    const Matrix psi = random_matrix(rng, 3, 3);
    // loop oracle: sum_i (H Psi H^T)_(i,i) with its own products
    double want = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) {
          want += h(i, a) * psi(a, b) * h(i, b);
        }
      }
    }
    CHECK(trace_quadratic(h, psi) == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK_THROWS_AS(trace_quadratic(Matrix(2, 3), Matrix(4, 4)), std::invalid_argument);
}
