#pragma once

#include "glemb/graph_weights.hpp"
#include "glemb/linalg.hpp"

namespace glemb {

/// Graph Laplacian of a weight matrix S: psi = G - (S + S^T)/2 with
/// G = diag(g_11, ..., g_NN), g_ii = sum_{j != i} (S_ij + S_ji)/2.
/// Symmetric by construction, rows sum to zero.
struct LaplacianMatrix {
  Matrix psi;

  std::size_t size() const { return psi.rows(); }
};

/// Assemble the Laplacian of w. Requires a zero diagonal on w.s.
LaplacianMatrix build_laplacian(const WeightMatrix& w);

/// The graph-weighted sum of squared pair distances in trace form:
///   sum_ij S_ij * ||x_i - x_j||^2 = 2 tr(H psi H^T).
/// Returned raw; any batch-size scaling is the caller's concern.
double laplacian_loss(const Matrix& h, const LaplacianMatrix& lap);

/// Gradient of laplacian_loss with respect to the feature columns:
/// column i of the result is 4 * H * psi_(:,i), i.e. the whole matrix is
/// 4 * H * psi. The weights behind psi are held fixed; the indicator counts
/// they are built from are piecewise constant in H, so away from hinge
/// boundaries this is the exact gradient.
Matrix laplacian_grad(const Matrix& h, const LaplacianMatrix& lap);

}  // namespace glemb
