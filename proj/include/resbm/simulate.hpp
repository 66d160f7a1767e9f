#pragma once

#include "resbm/types.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace resbm {

struct SimConfig {
  int n = 500;
  int k = 3;
  int members = 5;
  /// Probability that a member's label differs from the mean label.
  double kappa = 0.05;
  /// Diagonal block probabilities ~ U(a, b); off-diagonals ~ U(a/rho, b/rho).
  double a = 0.4;
  double b = 0.6;
  double rho = 2.0;
  /// Expected average degree per network; unset keeps the raw block probabilities.
  std::optional<double> degree_target;
  std::uint64_t seed = 1;

  void validate() const;
};

HardAssignment draw_zbar(const SimConfig& config);

/// Z_i^(m) ~ Multinomial(1, (Z_bar T)_i); one RNG stream per (member, node).
std::vector<HardAssignment> perturb_members(const HardAssignment& z_bar, const TransitionMatrix& t,
                                            int members, std::uint64_t seed);

/// Expected average degree of a sample under block matrices `pi` and community sizes.
double expected_average_degree(const std::vector<Matrix>& pi, const std::vector<int>& sizes);

/// Shared diagonal, per-member symmetric off-diagonals; optionally rescaled to hit
/// `degree_target` using the community sizes of `z_bar`.
BlockParams draw_block_params(const SimConfig& config, const HardAssignment& z_bar);

/// A_ij^(m) ~ Bernoulli(pi^(m)_{z_i z_j}) for i < j; one RNG stream per member.
NetworkSample draw_edges(const std::vector<HardAssignment>& z_members, const BlockParams& blocks,
                         std::uint64_t seed);

struct Simulation {
  NetworkSample sample;
  ResbmFit truth;
};

Simulation simulate(const SimConfig& config);

/// Copy of `z` with exactly `count` nodes (chosen uniformly) moved to a different community.
HardAssignment change_labels(const HardAssignment& z, int count, std::uint64_t seed);

struct TwoGroupSimulation {
  Simulation a;
  Simulation b;
};

/// Two groups sharing T and block parameters (drawn once for m_a + m_b members and split).
/// Group B's mean labels are group A's with `changed` nodes moved; `config.members` is ignored.
TwoGroupSimulation simulate_two_groups(const SimConfig& config, int m_a, int m_b, int changed);

}  // namespace resbm
