#pragma once

#include "resbm/types.hpp"

#include <cstdint>
#include <vector>

namespace resbm {

/// Exact maximum-weight assignment on a square integer matrix (Hungarian method).
/// Returns col[row]. Among all optimal assignments, the lexicographically smallest
/// (compared by col[0], col[1], ...) is returned.
std::vector<int> solve_lsap_max(const std::vector<std::vector<std::int64_t>>& weight);

/// k x k overlap counts: overlap[q][l] = #{i : a_i = q, b_i = l}.
std::vector<std::vector<std::int64_t>> overlap_counts(const HardAssignment& a,
                                                      const HardAssignment& b);

struct Alignment {
  /// reference community q is matched with candidate community sigma[q].
  std::vector<int> sigma;
  /// candidate expressed in the reference's labels.
  HardAssignment relabeled;
  /// label map for the candidate: candidate label l becomes map[l] (the inverse of sigma).
  std::vector<int> candidate_map() const;
};

Alignment align_labels(const HardAssignment& reference, const HardAssignment& candidate);

/// Mutual information over the arithmetic mean of the two entropies. Two single-cluster
/// partitions score 1.
double nmi(const HardAssignment& a, const HardAssignment& b);

/// Fraction of nodes whose labels agree after LSAP alignment.
double correct_classification_rate(const HardAssignment& a, const HardAssignment& b);

double t_error(const Matrix& t_hat, const Matrix& t_true);
double t_median_abs(const Matrix& t_hat, const Matrix& t_true);

/// Fraction of members in which each node pair shares a community; unit diagonal.
Matrix module_consistency(const std::vector<HardAssignment>& z_members);

struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

/// ROC over unordered pairs i < j with scores p_hat_ij. AUC is the Mann-Whitney statistic
/// with midranks for ties.
RocCurve roc_auc(const Matrix& adjacency, const Matrix& p_hat);

/// Edge probability matrix pi_{z_i z_j} of member m of a fit (zero diagonal).
Matrix edge_probabilities(const HardAssignment& z, const Matrix& pi);

}  // namespace resbm
