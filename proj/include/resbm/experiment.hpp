#pragma once

#include "resbm/inference.hpp"
#include "resbm/simulate.hpp"
#include "resbm/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace resbm {

/// Methods of the simulation comparison. ind-spectral scores members only; mean-spectral uses
/// its mean labels for every member; mlsbm scores the mean labels only; spectralk scores the
/// Ind. Spectral + SpectralK pipeline.
enum class Method { varem, co_osntf, co_spectral, ind_spectral, mean_spectral, spectral_k, mlsbm };

std::string to_string(Method m);
Method parse_method(const std::string& s);
const std::vector<Method>& all_methods();

struct MethodScore {
  Method method = Method::varem;
  std::optional<double> member_nmi;
  std::optional<double> zbar_nmi;
  /// Frobenius error of T after aligning the fitted mean labels to the truth.
  std::optional<double> t_error;
  std::vector<std::string> warnings;
};

struct ReplicateResult {
  int replicate = 0;
  double kappa = 0.0;
  std::uint64_t sim_seed = 0;
  std::vector<MethodScore> scores;

  const MethodScore& score(Method m) const;
};

struct CompareOptions {
  std::vector<double> kappas{0.05};
  int replicates = 10;
  std::vector<Method> methods = all_methods();
  EstimatorConfig estimators;
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Scores a fitted model against the simulation truth.
MethodScore score_fit(Method method, const ResbmFit& fit, const ResbmFit& truth);

/// Runs one method on one simulated sample.
MethodScore run_method(Method method, const Simulation& sim, const EstimatorConfig& estimators,
                       std::uint64_t seed);

/// For every kappa and replicate r, simulates `base` with seed from stream (experiment, r) (the
/// same seed across kappas) and scores every method. Results are ordered by kappa, then
/// replicate.
std::vector<ReplicateResult> compare_methods(const SimConfig& base, const CompareOptions& options);

/// Mean of the requested metric over replicates at one kappa; nullopt when no replicate has it.
enum class Metric { member_nmi, zbar_nmi, t_error };
std::optional<double> mean_metric(const std::vector<ReplicateResult>& results, double kappa,
                                  Method method, Metric metric);

}  // namespace resbm
