#pragma once

#include "resbm/inference.hpp"
#include "resbm/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace resbm {

struct ExpectedAssignment {
  /// Rows (Z_bar T)_i.
  SoftAssignment mean;
  /// diag(T_q) - T_q^T T_q for every community q.
  std::vector<Matrix> community_covariance;
  HardAssignment z_bar;

  /// Covariance of the assignment vector of node i.
  const Matrix& covariance(int i) const {
    return community_covariance[static_cast<size_t>(z_bar[i])];
  }
};

ExpectedAssignment expected_assignment(const ResbmFit& fit);

enum class SingleMethod { spectral, osntf };

std::string to_string(SingleMethod m);
SingleMethod parse_single_method(const std::string& s);

/// Community labels of one network by the chosen single-network method.
HardAssignment estimate_subject(const Matrix& adjacency, int k, SingleMethod method,
                                std::uint64_t seed);

struct PredictionReport {
  /// median over (i, q) of |u_bar_iq - (Z_bar T)_iq|.
  double median_abs_error = 0.0;
  /// Mean over used subjects of the correct classification rate against Z_bar.
  double mean_classification_rate = 0.0;
  /// Average aligned one-hot assignment of the test subjects.
  Matrix u_bar;
  std::vector<double> subject_rates;
  int used = 0;
  int dropped = 0;
};

/// Clusters every test subject independently (subject s uses stream (subject, s)), aligns its
/// labels to fit.z_bar and compares the average assignment with Z_bar T.
PredictionReport prediction_error(const ResbmFit& fit, const NetworkSample& test_sample, int k,
                                  SingleMethod method = SingleMethod::osntf,
                                  std::uint64_t seed = 1, int workers = 1);

enum class Rule { loglik, muv };
enum class Group { a, b };

std::string to_string(Rule r);
Rule parse_rule(const std::string& s);

struct Classification {
  Group group = Group::a;
  bool tie = false;
  /// Log-likelihood (larger wins) or MUV distance (smaller wins) against each group.
  double score_a = 0.0;
  double score_b = 0.0;
};

/// Sum_i log (Z_bar T)_{i, u_i} with u aligned to the fit's labels and probabilities clamped
/// at 1e-9.
double subject_loglik(const HardAssignment& u, const ResbmFit& fit);

/// ||Z_bar T T^T Z_bar^T - U U^T||_F^2 with u aligned to the fit's labels.
double subject_muv(const HardAssignment& u, const ResbmFit& fit);

Classification classify_subject(const HardAssignment& u, const ResbmFit& fit_a,
                                const ResbmFit& fit_b, Rule rule = Rule::loglik);

struct SplitComparison {
  double classification_rate = 0.0;
  double t_median_abs = 0.0;
};

/// Repeatedly splits the members into two halves (repetition r uses stream (split, r)), fits
/// each half and compares the two Z_bar by classification rate and the aligned T by median
/// absolute difference.
std::vector<SplitComparison> split_validation(const NetworkSample& sample, int k,
                                              const EstimatorConfig& estimator, int repetitions,
                                              std::uint64_t seed, int workers = 1);

struct HoldoutSplit {
  std::vector<int> train;
  std::vector<int> test;
};

/// Random split of `members` indices with `holdout` test members, from stream (split, r, salt).
HoldoutSplit random_holdout(int members, int holdout, std::uint64_t seed, int repetition,
                            std::uint32_t salt = 0);

struct LambdaPoint {
  double lambda = 0.0;
  double mean_error = 0.0;
  std::vector<double> errors;
};

/// Out-of-sample prediction error of Co-OSNTF across a lambda grid. Every lambda sees the same
/// `repetitions` holdout splits.
std::vector<LambdaPoint> sweep_lambda(const NetworkSample& sample, int k,
                                      const std::vector<double>& lambdas, int holdout,
                                      int repetitions, const CoOsntfOptions& base,
                                      SingleMethod method, std::uint64_t seed, int workers = 1);

}  // namespace resbm
