#pragma once

#include "resbm/twostep.hpp"
#include "resbm/types.hpp"
#include "resbm/varem.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace resbm {

enum class Estimator { varem, co_osntf, co_spectral, spectral_k };
enum class Statistic { muv, sine, muv_node };
enum class Correction { bh_fdr, holm_fwer };

std::string to_string(Estimator e);
std::string to_string(Statistic s);
std::string to_string(Correction c);
Estimator parse_estimator(const std::string& s);
Statistic parse_statistic(const std::string& s);
Correction parse_correction(const std::string& s);

/// Estimator choice plus the options of each method; only the chosen one is used.
struct EstimatorConfig {
  Estimator kind = Estimator::co_osntf;
  VarEmOptions varem;
  CoOsntfOptions co_osntf;
  CoSpectralOptions co_spectral;
};

/// Runs the configured estimator with `seed` overriding the options' seed.
ResbmFit run_estimator(const EstimatorConfig& config, const NetworkSample& sample, int k,
                       std::uint64_t seed);

/// Half the squared Frobenius distance between the partition projectors Z (Z^T Z)^{-1} Z^T.
double sine_statistic(const HardAssignment& zbar_a, const HardAssignment& zbar_b);

/// ||Z_A T_A T_A^T Z_A^T - Z_B T_B T_B^T Z_B^T||_F^2.
double muv_statistic(const HardAssignment& zbar_a, const TransitionMatrix& t_a,
                     const HardAssignment& zbar_b, const TransitionMatrix& t_b);

/// Per-node squared distance between (Z_A T_A)_i and (Z_B T_B)_i after relabeling group B by
/// `sigma` (group A community q corresponds to group B community sigma[q]).
Vector muv_node_statistic(const HardAssignment& zbar_a, const TransitionMatrix& t_a,
                          const HardAssignment& zbar_b, const TransitionMatrix& t_b,
                          const std::vector<int>& sigma);

/// Node statistic with sigma from LSAP alignment of zbar_b to zbar_a.
Vector muv_node_statistic_aligned(const HardAssignment& zbar_a, const TransitionMatrix& t_a,
                                  const HardAssignment& zbar_b, const TransitionMatrix& t_b);

struct Adjusted {
  Vector adjusted;
  std::vector<bool> rejected;
};

/// Benjamini-Hochberg step-up or Holm step-down adjusted p-values, rejecting adjusted <= level.
Adjusted adjust_pvalues(const Vector& p, Correction method, double level);

struct TestResult {
  Statistic statistic = Statistic::muv;
  Estimator estimator = Estimator::co_osntf;
  /// Length 1 for network-level statistics, n for the node-level one.
  Vector observed;
  /// One entry per resample that succeeded, in resample order.
  std::vector<Vector> null_samples;
  /// (1 + #{null >= observed}) / (1 + resamples used), per entry of `observed`.
  Vector p_value;
  int n_resamples = 0;
  int n_skipped = 0;
  std::map<std::string, Adjusted> corrected;
  std::uint64_t seed = 0;

  int n_used() const { return static_cast<int>(null_samples.size()); }
};

struct PermutationOptions {
  int n_resamples = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Permutation test of group A against group B. Every statistic in `statistics` is computed
/// from the same resampled fits. Resample r draws its split and its estimator seeds from stream
/// (resample, r, attempt); a failing resample is retried once with attempt 1 and then skipped.
std::vector<TestResult> permutation_test(const NetworkSample& sample_a,
                                         const NetworkSample& sample_b, int k,
                                         const EstimatorConfig& estimator,
                                         const std::vector<Statistic>& statistics,
                                         const PermutationOptions& options);

TestResult permutation_test(const NetworkSample& sample_a, const NetworkSample& sample_b, int k,
                            const EstimatorConfig& estimator, Statistic statistic,
                            const PermutationOptions& options);

}  // namespace resbm
