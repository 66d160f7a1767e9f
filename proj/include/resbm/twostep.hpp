#pragma once

#include "resbm/types.hpp"

#include <cstdint>
#include <vector>

namespace resbm {

/// Iterate of the co-regularized orthogonal symmetric NMF tri-factorization.
struct FactorState {
  std::vector<Matrix> u_members;  // n x k, >= 0
  std::vector<Matrix> s_members;  // k x k, >= 0
  Matrix u_star;                  // n x k, >= 0
  std::vector<double> lambda;     // one weight per member
  std::vector<double> objective_trace;
  std::vector<double> orthogonality_gap;  // max over factors of ||U^T U - I||_F, per sweep

  int members() const { return static_cast<int>(u_members.size()); }
};

/// Floor applied to every denominator of the multiplicative rules.
inline constexpr double kDenominatorFloor = 1e-12;

/// sum_m ||L_m - U_m S_m U_m^T||_F^2 + lambda_m (k - ||U_m^T U*||_F^2), evaluated directly.
double co_osntf_objective(const FactorState& state, const std::vector<Matrix>& laplacians);

/// S_m <- S_m * sqrt((U^T L U) / (U^T U S U^T U)), elementwise.
Matrix update_s(const FactorState& state, const std::vector<Matrix>& laplacians, int m);

/// U_m <- U_m * sqrt((L U S + lambda U* U*^T U) / (U U^T L U S + lambda U U^T U* U*^T U)).
Matrix update_u_member(const FactorState& state, const std::vector<Matrix>& laplacians, int m);

/// U* <- U* * sqrt((sum lambda U U^T U*) / (sum lambda U* U*^T U U^T U*)); unchanged when all
/// lambda are zero.
Matrix update_u_star(const FactorState& state);

/// One full sweep: all S, then all U_m, then U*. Appends the objective and the
/// orthogonality gap to the traces.
void osntf_sweep(FactorState& state, const std::vector<Matrix>& laplacians);

/// Strictly positive random start: U, U*, S entries |N(0,1)| with unit column norms (S is
/// symmetrized). Streams (osntf_restart, restart, factor index).
FactorState init_factor_state(int n, int k, const std::vector<double>& lambda, std::uint64_t seed,
                              int restart);

struct CoOsntfOptions {
  /// One value broadcasts to every member; otherwise one value per member.
  std::vector<double> lambda{0.01};
  int max_iter = 2000;
  double tol = 1e-7;
  int restarts = 5;
  std::uint64_t seed = 1;
  /// Restart 0 starts from Ind. Spectral member labels aligned to SpectralK mean labels
  /// (one-hot plus `spectral_offset`, unit columns); the other restarts are random.
  bool spectral_start = true;
  double spectral_offset = 0.1;
};

struct CoOsntfResult {
  ResbmFit fit;
  FactorState state;
};

CoOsntfResult fit_co_osntf_detailed(const NetworkSample& sample, int k, const CoOsntfOptions& options);
ResbmFit fit_co_osntf(const NetworkSample& sample, int k, const CoOsntfOptions& options = {});

/// Strictly positive start built from hard labels: U = one-hot + offset with unit columns,
/// S = U^T L U.
FactorState labels_factor_state(const std::vector<Matrix>& laplacians,
                                const std::vector<HardAssignment>& members,
                                const HardAssignment& mean, const std::vector<double>& lambda,
                                double offset);

/// Single-network OSNTF (lambda = 0) with row-argmax labels. Restart 0 starts from spectral
/// clustering labels.
HardAssignment osntf_single(const Matrix& adjacency, int k, std::uint64_t seed, int restarts = 5);

struct CoSpectralOptions {
  double gamma = 0.05;
  int max_iter = 100;
  double tol = 1e-7;
  std::uint64_t seed = 1;
};

/// Centroid co-regularized spectral clustering: alternate top-k eigenvectors of
/// L_m + gamma U* U*^T and of sum_m gamma U_m U_m^T, then k-means on rows.
ResbmFit fit_co_spectral(const NetworkSample& sample, int k, const CoSpectralOptions& options = {});

/// T_ql = n_ql / sum_l n_ql with n_ql counting (mean label q, member label l) pairs over all
/// nodes and members. Labels must already share one labelling.
TransitionMatrix conditional_mle(const HardAssignment& z_bar,
                                 const std::vector<HardAssignment>& z_members);

}  // namespace resbm
