#include "resbm/graph.hpp"

#include "resbm/error.hpp"

#include <cmath>

namespace resbm {

Matrix normalized_affinity(const Matrix& weights) {
  if (weights.rows() != weights.cols()) throw ValidationError("affinity matrix is not square");
  const Vector deg = weights.rowwise().sum();
  Vector inv_sqrt(deg.size());
  for (Eigen::Index i = 0; i < deg.size(); ++i) {
    inv_sqrt(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  }
  return inv_sqrt.asDiagonal() * weights * inv_sqrt.asDiagonal();
}

Matrix laplacian(const Matrix& adjacency) {
  validate_adjacency(adjacency);
  return normalized_affinity(adjacency);
}

Matrix threshold_correlation(const Matrix& r, double tau, bool absolute) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("threshold must lie in [0,1]");
  if (r.rows() != r.cols()) throw ValidationError("correlation matrix is not square");
  const Eigen::Index n = r.rows();
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = absolute ? std::abs(r(i, j)) : r(i, j);
      if (v > tau) {
        a(i, j) = 1.0;
        a(j, i) = 1.0;
      }
    }
  }
  return a;
}

double density(const Matrix& adjacency) {
  validate_adjacency(adjacency);
  const double n = static_cast<double>(adjacency.rows());
  if (n < 2) return 0.0;
  return adjacency.sum() / (n * (n - 1.0));
}

std::vector<int> degrees(const Matrix& adjacency) {
  validate_adjacency(adjacency);
  std::vector<int> d(static_cast<size_t>(adjacency.rows()));
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    d[static_cast<size_t>(i)] = static_cast<int>(adjacency.row(i).sum());
  }
  return d;
}

}  // namespace resbm
