#include "glemb/laplacian_loss.hpp"

#include <stdexcept>

namespace glemb {

LaplacianMatrix build_laplacian(const WeightMatrix& w) {
  const std::size_t n = w.size();
  if (w.s.rows() != w.s.cols()) {
    throw std::invalid_argument("build_laplacian: weight matrix not square");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (w.s(i, i) != 0.0) {
      throw std::invalid_argument("build_laplacian: nonzero diagonal");
    }
  }
  // Off-diagonals of psi are -(S_ij + S_ji)/2, mirrored so symmetry is exact;
  // the diagonal is minus the off-diagonal row sum, which makes each row sum
  // to zero up to the association of one summation.
  Matrix psi(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = (w.s(i, j) + w.s(j, i)) / 2.0;
      psi(i, j) = -a;
      psi(j, i) = -a;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double g = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) g -= psi(i, j);
    }
    psi(i, i) = g;
  }
  return LaplacianMatrix{std::move(psi)};
}

double laplacian_loss(const Matrix& h, const LaplacianMatrix& lap) {
  if (h.cols() != lap.size()) {
    throw std::invalid_argument("laplacian_loss: dimension mismatch");
  }
  return 2.0 * trace_quadratic(h, lap.psi);
}

Matrix laplacian_grad(const Matrix& h, const LaplacianMatrix& lap) {
  if (h.cols() != lap.size()) {
    throw std::invalid_argument("laplacian_grad: dimension mismatch");
  }
  return scaled(mat_mul(h, lap.psi), 4.0);
}

}  // namespace glemb
