#include "resbm/baselines.hpp"

#include "resbm/error.hpp"
#include "resbm/graph.hpp"
#include "resbm/metrics.hpp"
#include "resbm/rng.hpp"
#include "resbm/twostep.hpp"

#include <Eigen/Eigenvalues>

#include <limits>

namespace resbm {

namespace {

KMeansResult kmeans_once(const Matrix& x, int k, Philox& rng, int max_iter) {
  const Eigen::Index n = x.rows();
  Matrix centers(k, x.cols());

  // k-means++ seeding.
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint32_t>(n))));
  Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += d2(i);
        if (cum > target && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint32_t>(n)));
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> labels(static_cast<size_t>(n), -1);
  Vector dist(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      dist(i) = best_d;
      if (labels[static_cast<size_t>(i)] != best) {
        labels[static_cast<size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<int> counts(static_cast<size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<size_t>(i)]) += x.row(i);
      ++counts[static_cast<size_t>(labels[static_cast<size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / counts[static_cast<size_t>(c)];
      } else {
        // Empty cluster: move its center onto the worst-served point.
        Eigen::Index far = 0;
        dist.maxCoeff(&far);
        centers.row(c) = x.row(far);
        dist(far) = 0.0;
        labels[static_cast<size_t>(far)] = c;
        changed = true;
      }
    }
  }

  KMeansResult r;
  r.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    r.inertia += (x.row(i) - centers.row(labels[static_cast<size_t>(i)])).squaredNorm();
  }
  r.labels = std::move(labels);
  r.centers = std::move(centers);
  return r;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int restarts, std::uint32_t salt,
                    int max_iter) {
  if (k < 1 || k > points.rows()) throw ValidationError("k-means needs 1 <= k <= number of points");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Philox rng = make_stream(seed, StreamTag::kmeans, salt, static_cast<std::uint32_t>(r));
    KMeansResult cur = kmeans_once(points, k, rng, max_iter);
    if (cur.inertia < best.inertia) best = std::move(cur);
  }
  return best;
}

Matrix top_eigenvectors(const Matrix& symmetric, int k) {
  if (symmetric.rows() != symmetric.cols()) throw ValidationError("matrix is not square");
  if (k < 1 || k > symmetric.rows()) throw ValidationError("need 1 <= k <= n for eigenvectors");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric);
  if (es.info() != Eigen::Success) throw EstimationError("symmetric eigensolver failed");
  const Eigen::Index n = symmetric.rows();
  Matrix v(n, k);
  for (int c = 0; c < k; ++c) {
    v.col(c) = es.eigenvectors().col(n - 1 - c);
    Eigen::Index arg = 0;
    v.col(c).cwiseAbs().maxCoeff(&arg);
    if (v(arg, c) < 0.0) v.col(c) = -v.col(c);
  }
  return v;
}

Matrix normalize_rows(Matrix m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double nrm = m.row(i).norm();
    if (nrm > 0.0) m.row(i) /= nrm;
  }
  return m;
}

HardAssignment cluster_embedding_rows(const Matrix& embedding, int k, std::uint64_t seed,
                                      std::uint32_t salt) {
  if (k == 1) return HardAssignment(std::vector<int>(static_cast<size_t>(embedding.rows()), 0), 1);
  const KMeansResult km = kmeans(normalize_rows(embedding), k, seed, 20, salt);
  return HardAssignment(km.labels, k);
}

HardAssignment spectral_single(const Matrix& weights, int k, std::uint64_t seed) {
  if (k < 1 || k > weights.rows()) throw ValidationError("need 1 <= k <= n");
  if ((weights - weights.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ValidationError("spectral clustering needs a symmetric matrix");
  }
  return cluster_embedding_rows(top_eigenvectors(normalized_affinity(weights), k), k, seed);
}

std::vector<HardAssignment> ind_spectral(const NetworkSample& sample, int k, std::uint64_t seed) {
  std::vector<HardAssignment> out;
  out.reserve(static_cast<size_t>(sample.size()));
  for (int m = 0; m < sample.size(); ++m) out.push_back(spectral_single(sample[m], k, seed));
  return out;
}

HardAssignment mean_spectral(const NetworkSample& sample, int k, std::uint64_t seed) {
  Matrix mean = Matrix::Zero(sample.n(), sample.n());
  for (const Matrix& a : sample.adjacency()) mean += a;
  mean /= static_cast<double>(sample.size());
  return spectral_single(mean, k, seed);
}

HardAssignment spectral_k(const NetworkSample& sample, int k, std::uint64_t seed) {
  if (k < 1 || k > sample.n()) throw ValidationError("need 1 <= k <= n");
  Matrix kernel = Matrix::Zero(sample.n(), sample.n());
  for (const Matrix& a : sample.adjacency()) {
    const Matrix v = top_eigenvectors(laplacian(a), k);
    kernel.noalias() += v * v.transpose();
  }
  kernel /= static_cast<double>(sample.size());
  return cluster_embedding_rows(top_eigenvectors(kernel, k), k, seed);
}

ResbmFit fit_spectral_k(const NetworkSample& sample, int k, std::uint64_t seed) {
  ResbmFit fit;
  fit.z_bar = spectral_k(sample, k, seed);
  for (const HardAssignment& z : ind_spectral(sample, k, seed)) {
    fit.z_members.push_back(align_labels(fit.z_bar, z).relabeled);
  }
  fit.t = conditional_mle(fit.z_bar, fit.z_members);
  fit.soft_z_bar = SoftAssignment::from_hard(fit.z_bar);
  for (const auto& z : fit.z_members) fit.soft_members.push_back(SoftAssignment::from_hard(z));
  fit.converged = true;
  fit.iterations = 1;
  return fit;
}

}  // namespace resbm
