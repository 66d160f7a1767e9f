#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace resbm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// M symmetric binary adjacency matrices over a shared, identically ordered node set.
/// Entries are stored as doubles (0.0/1.0) so dense products go straight through Eigen.
class NetworkSample {
 public:
  NetworkSample() = default;
  explicit NetworkSample(std::vector<Matrix> adjacency,
                         std::vector<std::string> node_labels = {},
                         std::vector<std::string> member_ids = {});

  int n() const { return n_; }
  int size() const { return static_cast<int>(adjacency_.size()); }
  const Matrix& operator[](int m) const { return adjacency_[static_cast<size_t>(m)]; }
  const std::vector<Matrix>& adjacency() const { return adjacency_; }
  const std::vector<std::string>& node_labels() const { return node_labels_; }
  const std::vector<std::string>& member_ids() const { return member_ids_; }

  /// Members picked by index, in the given order.
  NetworkSample subset(const std::vector<int>& members) const;

  /// Concatenation of two samples over the same node set.
  static NetworkSample concat(const NetworkSample& a, const NetworkSample& b);

 private:
  int n_ = 0;
  std::vector<Matrix> adjacency_;
  std::vector<std::string> node_labels_;
  std::vector<std::string> member_ids_;
};

/// Throws ValidationError unless `a` is square, symmetric, binary with zero diagonal.
void validate_adjacency(const Matrix& a);

/// Hard community assignment stored as one 0-based label per node. Equivalent to an n x k
/// binary matrix with exactly one 1 per row.
class HardAssignment {
 public:
  HardAssignment() = default;
  HardAssignment(std::vector<int> labels, int k);

  static HardAssignment from_matrix(const Matrix& z);
  /// Row-argmax; ties go to the lowest community index.
  static HardAssignment argmax(const Matrix& scores);

  int n() const { return static_cast<int>(labels_.size()); }
  int k() const { return k_; }
  int operator[](int i) const { return labels_[static_cast<size_t>(i)]; }
  const std::vector<int>& labels() const { return labels_; }

  Matrix matrix() const;
  std::vector<int> sizes() const;
  /// Relabel: node with label q gets label map[q].
  HardAssignment relabeled(const std::vector<int>& map) const;
  HardAssignment permuted_nodes(const std::vector<int>& order) const;

  friend bool operator==(const HardAssignment&, const HardAssignment&) = default;

 private:
  std::vector<int> labels_;
  int k_ = 0;
};

/// n x k non-negative matrix with unit row sums.
class SoftAssignment {
 public:
  static constexpr double kTolerance = 1e-10;

  SoftAssignment() = default;
  explicit SoftAssignment(Matrix m);

  static SoftAssignment from_hard(const HardAssignment& z);
  /// Normalizes each row; an all-zero row becomes uniform.
  static SoftAssignment normalize_rows(Matrix m);

  int n() const { return static_cast<int>(m_.rows()); }
  int k() const { return static_cast<int>(m_.cols()); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

/// k x k row-stochastic matrix T; diagonal holds the retention probabilities.
class TransitionMatrix {
 public:
  static constexpr double kTolerance = 1e-10;

  TransitionMatrix() = default;
  explicit TransitionMatrix(Matrix m);

  static TransitionMatrix identity(int k);
  static TransitionMatrix uniform(int k);
  /// Diagonal 1 - kappa, off-diagonal mass split evenly.
  static TransitionMatrix from_kappa(int k, double kappa);

  int k() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int q, int l) const { return m_(q, l); }
  /// T relabeled by a community permutation: result(map[q], map[l]) = T(q, l).
  TransitionMatrix relabeled(const std::vector<int>& map) const;

 private:
  Matrix m_;
};

/// Per-member block probabilities plus the mixing proportions of the mean labels.
struct BlockParams {
  std::vector<Matrix> pi;
  Vector alpha;

  /// Checks symmetry, range, shared diagonal and alpha normalization.
  void validate(double tol = 1e-10) const;
};

/// Output of every estimator, and the ground truth of a simulation.
struct ResbmFit {
  HardAssignment z_bar;
  TransitionMatrix t;
  std::vector<HardAssignment> z_members;
  SoftAssignment soft_z_bar;
  std::vector<SoftAssignment> soft_members;
  std::optional<BlockParams> blocks;
  std::vector<double> objective_trace;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> warnings;

  int n() const { return z_bar.n(); }
  int k() const { return z_bar.k(); }
  int members() const { return static_cast<int>(z_members.size()); }

  void validate() const;
};

}  // namespace resbm
