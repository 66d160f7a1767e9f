#pragma once

#include "resbm/types.hpp"

#include <vector>

namespace resbm {

/// D^{-1/2} A D^{-1/2} for a validated binary adjacency matrix. Isolated nodes give zero
/// rows and columns.
Matrix laplacian(const Matrix& adjacency);

/// Same normalization for any symmetric non-negative weight matrix (mean adjacency,
/// co-membership kernels). No binary check.
Matrix normalized_affinity(const Matrix& weights);

/// A_ij = 1 iff r_ij > tau (i != j). With `absolute`, |r_ij| is compared instead.
Matrix threshold_correlation(const Matrix& r, double tau, bool absolute = false);

double density(const Matrix& adjacency);
std::vector<int> degrees(const Matrix& adjacency);

}  // namespace resbm
