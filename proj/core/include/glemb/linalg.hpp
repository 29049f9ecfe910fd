#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace glemb {

/// Dense real matrix, double precision, row-major flat storage.
///
/// Batches of embeddings follow the samples-as-columns convention: a feature
/// batch H is d x N with column i holding sample i. Matrices here are small
/// (a few hundred rows/columns at most), so every operation is a plain
/// deterministic loop; results are bit-reproducible for a given build.
class Matrix {
 public:
  Matrix() = default;

  /// Zero-initialized rows x cols matrix.
  Matrix(std::size_t rows, std::size_t cols);

  /// Construct from row-major data. Throws std::invalid_argument if the
  /// entry count does not match or any entry is non-finite.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  /// Column c as a contiguous vector (rows entries).
  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, const std::vector<double>& v);

  bool all_finite() const;

  Matrix transposed() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// N x N matrix of pairwise squared Euclidean distances between the columns
/// of a feature batch. Symmetric with an exactly zero diagonal.
struct DistanceMatrix {
  Matrix d2;

  std::size_t size() const { return d2.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return d2(i, j); }
};

/// Squared distances between all column pairs of h (d x N).
/// The diagonal is forced to exactly zero and entry (i,j) is computed once
/// and mirrored, so the DistanceMatrix invariants hold exactly.
/// Throws std::invalid_argument on empty or non-finite input.
DistanceMatrix pairwise_sq_dist(const Matrix& h);

/// Standard dense product. Fixed i-j-k summation order.
/// Throws std::invalid_argument on inner-dimension mismatch.
Matrix mat_mul(const Matrix& a, const Matrix& b);

/// tr(h * psi * h^T) with h d x N and psi N x N.
double trace_quadratic(const Matrix& h, const Matrix& psi);

/// a + s * b, elementwise.
Matrix add_scaled(const Matrix& a, const Matrix& b, double s);

/// s * a, elementwise.
Matrix scaled(const Matrix& a, double s);

}  // namespace glemb
