#include "resbm/types.hpp"

#include "resbm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace resbm {

namespace {

std::vector<int> validate_permutation(const std::vector<int>& map, int k) {
  if (static_cast<int>(map.size()) != k) {
    throw ValidationError("label map has size " + std::to_string(map.size()) + ", expected " +
                          std::to_string(k));
  }
  std::vector<int> seen(static_cast<size_t>(k), 0);
  for (int v : map) {
    if (v < 0 || v >= k || seen[static_cast<size_t>(v)]++) {
      throw ValidationError("label map is not a permutation");
    }
  }
  return map;
}

}  // namespace

void validate_adjacency(const Matrix& a) {
  if (a.rows() != a.cols()) throw ValidationError("adjacency matrix is not square");
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a(i, i) != 0.0) {
      throw ValidationError("adjacency matrix has nonzero diagonal at node " + std::to_string(i));
    }
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      const double v = a(i, j);
      if (v != 0.0 && v != 1.0) {
        throw ValidationError("adjacency entry (" + std::to_string(i) + "," + std::to_string(j) +
                              ") is not binary");
      }
      if (a(j, i) != v) {
        throw ValidationError("adjacency matrix is not symmetric at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
      }
    }
  }
}

NetworkSample::NetworkSample(std::vector<Matrix> adjacency, std::vector<std::string> node_labels,
                             std::vector<std::string> member_ids)
    : adjacency_(std::move(adjacency)),
      node_labels_(std::move(node_labels)),
      member_ids_(std::move(member_ids)) {
  if (adjacency_.empty()) throw ValidationError("network sample has no members");
  n_ = static_cast<int>(adjacency_.front().rows());
  for (size_t m = 0; m < adjacency_.size(); ++m) {
    if (adjacency_[m].rows() != n_ || adjacency_[m].cols() != n_) {
      throw ValidationError("member " + std::to_string(m) + " has a different node count");
    }
    validate_adjacency(adjacency_[m]);
  }
  if (!node_labels_.empty() && static_cast<int>(node_labels_.size()) != n_) {
    throw ValidationError("node label count does not match n");
  }
  if (!member_ids_.empty() && member_ids_.size() != adjacency_.size()) {
    throw ValidationError("member id count does not match M");
  }
}

NetworkSample NetworkSample::subset(const std::vector<int>& members) const {
  std::vector<Matrix> adj;
  std::vector<std::string> ids;
  adj.reserve(members.size());
  for (int m : members) {
    if (m < 0 || m >= size()) throw ValidationError("member index out of range");
    adj.push_back(adjacency_[static_cast<size_t>(m)]);
    if (!member_ids_.empty()) ids.push_back(member_ids_[static_cast<size_t>(m)]);
  }
  return NetworkSample(std::move(adj), node_labels_, std::move(ids));
}

NetworkSample NetworkSample::concat(const NetworkSample& a, const NetworkSample& b) {
  if (a.n() != b.n()) throw ValidationError("samples have different node counts");
  std::vector<Matrix> adj = a.adjacency_;
  adj.insert(adj.end(), b.adjacency_.begin(), b.adjacency_.end());
  std::vector<std::string> ids;
  if (!a.member_ids_.empty() && !b.member_ids_.empty()) {
    ids = a.member_ids_;
    ids.insert(ids.end(), b.member_ids_.begin(), b.member_ids_.end());
  }
  return NetworkSample(std::move(adj), a.node_labels_, std::move(ids));
}

HardAssignment::HardAssignment(std::vector<int> labels, int k) : labels_(std::move(labels)), k_(k) {
  if (k_ < 1) throw ValidationError("assignment needs k >= 1");
  for (size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= k_) {
      throw ValidationError("node " + std::to_string(i) + " has label " +
                            std::to_string(labels_[i]) + " outside [0," + std::to_string(k_) +
                            ")");
    }
  }
}

HardAssignment HardAssignment::from_matrix(const Matrix& z) {
  std::vector<int> labels(static_cast<size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index q = 0; q < z.cols(); ++q) {
      if (z(i, q) == 1.0) {
        labels[static_cast<size_t>(i)] = static_cast<int>(q);
        ++ones;
      } else if (z(i, q) != 0.0) {
        throw ValidationError("assignment row " + std::to_string(i) + " is not binary");
      }
    }
    if (ones != 1) {
      throw ValidationError("assignment row " + std::to_string(i) + " does not have exactly one 1");
    }
  }
  return HardAssignment(std::move(labels), static_cast<int>(z.cols()));
}

HardAssignment HardAssignment::argmax(const Matrix& scores) {
  std::vector<int> labels(static_cast<size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Eigen::Index q = 1; q < scores.cols(); ++q) {
      if (scores(i, q) > scores(i, best)) best = static_cast<int>(q);
    }
    labels[static_cast<size_t>(i)] = best;
  }
  return HardAssignment(std::move(labels), static_cast<int>(scores.cols()));
}

Matrix HardAssignment::matrix() const {
  Matrix z = Matrix::Zero(n(), k_);
  for (int i = 0; i < n(); ++i) z(i, labels_[static_cast<size_t>(i)]) = 1.0;
  return z;
}

std::vector<int> HardAssignment::sizes() const {
  std::vector<int> s(static_cast<size_t>(k_), 0);
  for (int l : labels_) ++s[static_cast<size_t>(l)];
  return s;
}

HardAssignment HardAssignment::relabeled(const std::vector<int>& map) const {
  validate_permutation(map, k_);
  std::vector<int> out(labels_.size());
  for (size_t i = 0; i < labels_.size(); ++i) out[i] = map[static_cast<size_t>(labels_[i])];
  return HardAssignment(std::move(out), k_);
}

HardAssignment HardAssignment::permuted_nodes(const std::vector<int>& order) const {
  std::vector<int> out(order.size());
  for (size_t i = 0; i < order.size(); ++i) out[i] = labels_.at(static_cast<size_t>(order[i]));
  return HardAssignment(std::move(out), k_);
}

SoftAssignment::SoftAssignment(Matrix m) : m_(std::move(m)) {
  for (Eigen::Index i = 0; i < m_.rows(); ++i) {
    if (!m_.row(i).allFinite() || (m_.row(i).array() < 0.0).any()) {
      throw ValidationError("soft assignment row " + std::to_string(i) +
                            " has negative or non-finite entries");
    }
    if (std::abs(m_.row(i).sum() - 1.0) > kTolerance) {
      throw ValidationError("soft assignment row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

SoftAssignment SoftAssignment::from_hard(const HardAssignment& z) { return SoftAssignment(z.matrix()); }

SoftAssignment SoftAssignment::normalize_rows(Matrix m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double s = m.row(i).sum();
    if (s > 0.0) {
      m.row(i) /= s;
    } else {
      m.row(i).setConstant(1.0 / static_cast<double>(m.cols()));
    }
  }
  return SoftAssignment(std::move(m));
}

TransitionMatrix::TransitionMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() < 1) {
    throw ValidationError("transition matrix must be square and non-empty");
  }
  for (Eigen::Index q = 0; q < m_.rows(); ++q) {
    if (!m_.row(q).allFinite() || (m_.row(q).array() < 0.0).any()) {
      throw ValidationError("transition matrix row " + std::to_string(q) +
                            " has negative or non-finite entries");
    }
    if (std::abs(m_.row(q).sum() - 1.0) > kTolerance) {
      throw ValidationError("transition matrix row " + std::to_string(q) + " does not sum to 1");
    }
  }
}

TransitionMatrix TransitionMatrix::identity(int k) { return TransitionMatrix(Matrix::Identity(k, k)); }

TransitionMatrix TransitionMatrix::uniform(int k) {
  return TransitionMatrix(Matrix::Constant(k, k, 1.0 / static_cast<double>(k)));
}

TransitionMatrix TransitionMatrix::from_kappa(int k, double kappa) {
  if (!(kappa >= 0.0 && kappa < 1.0)) throw ValidationError("kappa must lie in [0,1)");
  if (k == 1) return identity(1);
  Matrix t = Matrix::Constant(k, k, kappa / static_cast<double>(k - 1));
  t.diagonal().setConstant(1.0 - kappa);
  return TransitionMatrix(std::move(t));
}

TransitionMatrix TransitionMatrix::relabeled(const std::vector<int>& map) const {
  validate_permutation(map, k());
  Matrix out(k(), k());
  for (int q = 0; q < k(); ++q) {
    for (int l = 0; l < k(); ++l) out(map[static_cast<size_t>(q)], map[static_cast<size_t>(l)]) = m_(q, l);
  }
  return TransitionMatrix(std::move(out));
}

void BlockParams::validate(double tol) const {
  if (pi.empty()) throw ValidationError("block parameters have no members");
  const Eigen::Index k = pi.front().rows();
  if (alpha.size() != k) throw ValidationError("alpha length does not match k");
  if ((alpha.array() < 0.0).any() || std::abs(alpha.sum() - 1.0) > tol) {
    throw ValidationError("alpha is not a probability vector");
  }
  for (size_t m = 0; m < pi.size(); ++m) {
    const Matrix& p = pi[m];
    if (p.rows() != k || p.cols() != k) throw ValidationError("block matrix has wrong shape");
    if ((p.array() < 0.0).any() || (p.array() > 1.0).any()) {
      throw ValidationError("block matrix " + std::to_string(m) + " has entries outside [0,1]");
    }
    if ((p - p.transpose()).cwiseAbs().maxCoeff() > tol) {
      throw ValidationError("block matrix " + std::to_string(m) + " is not symmetric");
    }
    if ((p.diagonal() - pi.front().diagonal()).cwiseAbs().maxCoeff() > tol) {
      throw ValidationError("block matrix " + std::to_string(m) +
                            " breaks the shared-diagonal constraint");
    }
  }
}

void ResbmFit::validate() const {
  const int n0 = z_bar.n();
  const int k0 = z_bar.k();
  if (t.k() != k0) throw ValidationError("transition matrix size does not match k");
  if (soft_z_bar.n() != n0 || soft_z_bar.k() != k0) {
    throw ValidationError("soft mean assignment has wrong shape");
  }
  if (soft_members.size() != z_members.size()) {
    throw ValidationError("soft member assignments do not match member count");
  }
  for (size_t m = 0; m < z_members.size(); ++m) {
    if (z_members[m].n() != n0 || z_members[m].k() != k0) {
      throw ValidationError("member assignment " + std::to_string(m) + " has wrong shape");
    }
    if (soft_members[m].n() != n0 || soft_members[m].k() != k0) {
      throw ValidationError("soft member assignment " + std::to_string(m) + " has wrong shape");
    }
  }
  if (blocks) {
    blocks->validate(1e-8);
    if (blocks->pi.size() != z_members.size()) {
      throw ValidationError("block parameters do not match member count");
    }
  }
}

}  // namespace resbm
