#include "glemb/linalg.hpp"

#include <cmath>
#include <utility>

namespace glemb {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("Matrix: dimensions must be >= 1");
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("Matrix: dimensions must be >= 1");
  }
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: entry count != rows * cols");
  }
  if (!all_finite()) {
    throw std::invalid_argument("Matrix: non-finite entry");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

void Matrix::set_column(std::size_t c, const std::vector<double>& v) {
  if (v.size() != rows_) {
    throw std::invalid_argument("set_column: length mismatch");
  }
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

bool Matrix::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

DistanceMatrix pairwise_sq_dist(const Matrix& h) {
  if (h.empty()) {
    throw std::invalid_argument("pairwise_sq_dist: empty feature batch");
  }
  if (!h.all_finite()) {
    throw std::invalid_argument("pairwise_sq_dist: non-finite entry");
  }
  const std::size_t n = h.cols();
  const std::size_t d = h.rows();
  Matrix d2(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = h(k, i) - h(k, j);
        acc += diff * diff;
      }
      d2(i, j) = acc;
      d2(j, i) = acc;
    }
  }
  return DistanceMatrix{std::move(d2)};
}

Matrix mat_mul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("mat_mul: inner dimensions disagree");
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        acc += a(i, k) * b(k, j);
      }
      out(i, j) = acc;
    }
  }
  return out;
}

double trace_quadratic(const Matrix& h, const Matrix& psi) {
  if (psi.rows() != psi.cols() || h.cols() != psi.rows()) {
    throw std::invalid_argument("trace_quadratic: dimension mismatch");
  }
  // tr(H Psi H^T) = sum_{i,j} (H Psi)_(i,j) * H_(i,j)
  const Matrix hp = mat_mul(h, psi);
  double acc = 0.0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    for (std::size_t j = 0; j < h.cols(); ++j) {
      acc += hp(i, j) * h(i, j);
    }
  }
  return acc;
}

Matrix add_scaled(const Matrix& a, const Matrix& b, double s) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("add_scaled: shape mismatch");
  }
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] += s * b.data()[i];
  }
  return out;
}

Matrix scaled(const Matrix& a, double s) {
  Matrix out = a;
  for (double& x : out.data()) x *= s;
  return out;
}

}  // namespace glemb
