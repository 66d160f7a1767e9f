#pragma once

#include "resbm/types.hpp"

#include <cstdint>
#include <vector>

namespace resbm {

struct KMeansResult {
  std::vector<int> labels;
  Matrix centers;
  double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding; best of `restarts` by within-cluster sum of squares.
/// Restart r draws from stream (kmeans, salt, r).
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int restarts = 20,
                    std::uint32_t salt = 0, int max_iter = 300);

/// Eigenvectors of the k largest (algebraic) eigenvalues of a symmetric matrix, as columns.
/// Each column's sign is fixed so its largest-magnitude entry is positive.
Matrix top_eigenvectors(const Matrix& symmetric, int k);

/// Scales rows to unit length; zero rows stay zero.
Matrix normalize_rows(Matrix m);

/// Row-normalized spectral embedding of a symmetric matrix followed by k-means.
HardAssignment cluster_embedding_rows(const Matrix& embedding, int k, std::uint64_t seed,
                                      std::uint32_t salt = 0);

/// Spectral clustering of one network: top-k eigenvectors of D^{-1/2} W D^{-1/2}, row
/// normalization, k-means (k-means++, 20 restarts). Accepts binary or weighted W.
HardAssignment spectral_single(const Matrix& weights, int k, std::uint64_t seed);

/// Spectral clustering of every member separately, all with the same seed.
std::vector<HardAssignment> ind_spectral(const NetworkSample& sample, int k, std::uint64_t seed);

/// Spectral clustering of the mean adjacency matrix.
HardAssignment mean_spectral(const NetworkSample& sample, int k, std::uint64_t seed);

/// Spectral kernel: mean of the members' eigenvector projectors V V^T, clustered by its own
/// top-k eigenvectors.
HardAssignment spectral_k(const NetworkSample& sample, int k, std::uint64_t seed);

/// Full estimate from baselines: z_bar by SpectralK, members by Ind. Spectral aligned to z_bar,
/// T by conditional maximum likelihood.
ResbmFit fit_spectral_k(const NetworkSample& sample, int k, std::uint64_t seed);

}  // namespace resbm
