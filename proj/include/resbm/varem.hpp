#pragma once

#include "resbm/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace resbm {

inline constexpr double kProbFloor = 1e-9;

/// Mean-field state of the variational EM.
///
/// `epsilon[m]` is n x k^2 with entry (i, q*k + l) = P(Z_i^(m) = l | Z_bar_i = q); each
/// (i, q) block of k entries sums to one. `tau[m]` holds the member marginals
/// tau_il = sum_q tau_bar_iq eps_iql.
struct VariationalState {
  Matrix tau_bar;
  std::vector<Matrix> epsilon;
  std::vector<Matrix> tau;
  BlockParams params;
  TransitionMatrix t;
  std::vector<double> elbo_trace;
  std::vector<std::string> warnings;
  /// Keep T fixed in the M-step (T = identity gives the multi-layer SBM).
  bool freeze_t = false;

  int n() const { return static_cast<int>(tau_bar.rows()); }
  int k() const { return static_cast<int>(tau_bar.cols()); }
  int members() const { return static_cast<int>(tau.size()); }

  /// Throws unless every probability slice is normalized within `tol`.
  void validate(double tol = 1e-10) const;
};

/// Bernoulli likelihood term: pi if a == 1 else 1 - pi, with pi clamped to [1e-9, 1 - 1e-9].
double bernoulli_kernel(int a, double pi);

/// Variational E-step. Nodes are visited in order; for each node the member conditionals
/// epsilon, then tau_bar, then the member marginals tau are set to their exact maximizers
/// given all other nodes.
VariationalState ve_step(const VariationalState& state, const NetworkSample& sample);

/// Closed-form M-step for T, alpha and pi (shared diagonal pooled over members, off-diagonal
/// per member), pi clamped to [1e-9, 1 - 1e-9].
VariationalState m_step(const VariationalState& state, const NetworkSample& sample);

/// Evidence lower bound: expected complete-data log-likelihood plus the entropy of the
/// variational distribution.
double elbo(const VariationalState& state, const NetworkSample& sample);

/// Builds a state whose conditionals equal the member marginals (eps_iq. = tau_i.) and runs
/// one M-step.
VariationalState init_state(const NetworkSample& sample, const Matrix& tau_bar,
                            const std::vector<Matrix>& tau, bool freeze_t = false);

struct VarEmOptions {
  /// Start from these hard assignments instead of spectral clustering.
  std::optional<ResbmFit> init;
  int max_iter = 500;
  double tol = 1e-6;
  int restarts = 5;
  std::uint64_t seed = 1;
  /// Probability put on the initial hard label when softening.
  double soften = 0.9;
  /// Freeze T to the identity (multi-layer SBM baseline).
  bool mlsbm = false;
};

struct VarEmResult {
  ResbmFit fit;
  VariationalState state;
};

VarEmResult fit_varem_detailed(const NetworkSample& sample, int k, const VarEmOptions& options);
ResbmFit fit_varem(const NetworkSample& sample, int k, const VarEmOptions& options = {});

}  // namespace resbm
