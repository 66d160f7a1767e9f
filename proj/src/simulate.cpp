#include "resbm/simulate.hpp"

#include "resbm/error.hpp"
#include "resbm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace resbm {

void SimConfig::validate() const {
  if (n < 1) throw ValidationError("n must be positive");
  if (k < 1 || k > n) throw ValidationError("k must lie in [1, n]");
  if (members < 1) throw ValidationError("member count must be positive");
  if (!(kappa >= 0.0 && kappa < 1.0)) throw ValidationError("kappa must lie in [0,1)");
  if (!(a > 0.0 && a <= b && b <= 1.0)) throw ValidationError("need 0 < a <= b <= 1");
  if (!(rho >= 1.0)) throw ValidationError("rho must be at least 1");
  if (degree_target && !(*degree_target > 0.0)) {
    throw ValidationError("degree target must be positive");
  }
}

HardAssignment draw_zbar(const SimConfig& config) {
  config.validate();
  Philox rng = make_stream(config.seed, StreamTag::zbar);
  std::vector<int> labels(static_cast<size_t>(config.n));
  for (auto& l : labels) l = static_cast<int>(rng.below(static_cast<std::uint32_t>(config.k)));
  return HardAssignment(std::move(labels), config.k);
}

std::vector<HardAssignment> perturb_members(const HardAssignment& z_bar, const TransitionMatrix& t,
                                            int members, std::uint64_t seed) {
  if (t.k() != z_bar.k()) throw ValidationError("transition matrix does not match k");
  const int k = z_bar.k();
  std::vector<HardAssignment> out;
  out.reserve(static_cast<size_t>(members));
  for (int m = 0; m < members; ++m) {
    std::vector<int> labels(static_cast<size_t>(z_bar.n()));
    for (int i = 0; i < z_bar.n(); ++i) {
      Philox rng = make_stream(seed, StreamTag::member_assignment, static_cast<std::uint32_t>(m),
                               static_cast<std::uint32_t>(i));
      const double u = rng.uniform();
      const int q = z_bar[i];
      int pick = -1;
      double cum = 0.0;
      for (int l = 0; l < k; ++l) {
        cum += t(q, l);
        if (t(q, l) > 0.0) {
          pick = l;
          if (u < cum) break;
        }
      }
      labels[static_cast<size_t>(i)] = pick;
    }
    out.emplace_back(std::move(labels), k);
  }
  return out;
}

double expected_average_degree(const std::vector<Matrix>& pi, const std::vector<int>& sizes) {
  double total_nodes = std::accumulate(sizes.begin(), sizes.end(), 0.0);
  if (pi.empty() || total_nodes <= 0.0) return 0.0;
  const size_t k = sizes.size();
  double acc = 0.0;
  for (const Matrix& p : pi) {
    double member = 0.0;
    for (size_t q = 0; q < k; ++q) {
      double deg = -p(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
      for (size_t l = 0; l < k; ++l) {
        deg += p(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(l)) * sizes[l];
      }
      member += sizes[q] * deg;
    }
    acc += member / total_nodes;
  }
  return acc / static_cast<double>(pi.size());
}

BlockParams draw_block_params(const SimConfig& config, const HardAssignment& z_bar) {
  config.validate();
  const int k = config.k;
  BlockParams out;
  Philox diag_rng = make_stream(config.seed, StreamTag::blocks, 0);
  Vector diag(k);
  for (int q = 0; q < k; ++q) diag(q) = diag_rng.uniform(config.a, config.b);

  out.pi.reserve(static_cast<size_t>(config.members));
  for (int m = 0; m < config.members; ++m) {
    Philox rng = make_stream(config.seed, StreamTag::blocks, static_cast<std::uint32_t>(m + 1));
    Matrix p(k, k);
    p.diagonal() = diag;
    for (int q = 0; q < k; ++q) {
      for (int l = 0; l < q; ++l) {
        const double v = rng.uniform(config.a / config.rho, config.b / config.rho);
        p(q, l) = v;
        p(l, q) = v;
      }
    }
    out.pi.push_back(std::move(p));
  }

  if (config.degree_target) {
    if (z_bar.k() != k) throw ValidationError("mean assignment does not match k");
    const double base = expected_average_degree(out.pi, z_bar.sizes());
    if (base <= 0.0) throw ValidationError("expected degree is zero; cannot rescale");
    const double c = *config.degree_target / base;
    const double max_diag = diag.maxCoeff();
    if (c * max_diag > 1.0) {
      std::ostringstream msg;
      msg << "degree target " << *config.degree_target
          << " would push a diagonal block probability above 1; maximum feasible target is "
          << base / max_diag;
      throw ValidationError(msg.str());
    }
    for (Matrix& p : out.pi) p = (p * c).cwiseMin(1.0);
  }
  out.alpha = Vector::Constant(k, 1.0 / k);
  return out;
}

NetworkSample draw_edges(const std::vector<HardAssignment>& z_members, const BlockParams& blocks,
                         std::uint64_t seed) {
  if (z_members.size() != blocks.pi.size()) {
    throw ValidationError("member assignments and block matrices differ in count");
  }
  if (z_members.empty()) throw ValidationError("no members to generate");
  const int n = z_members.front().n();
  std::vector<Matrix> adj;
  adj.reserve(z_members.size());
  for (size_t m = 0; m < z_members.size(); ++m) {
    const HardAssignment& z = z_members[m];
    const Matrix& p = blocks.pi[m];
    if (z.n() != n || p.rows() != z.k()) throw ValidationError("inconsistent member dimensions");
    Philox rng = make_stream(seed, StreamTag::edges, static_cast<std::uint32_t>(m));
    Matrix a = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng.bernoulli(p(z[i], z[j]))) {
          a(i, j) = 1.0;
          a(j, i) = 1.0;
        }
      }
    }
    adj.push_back(std::move(a));
  }
  return NetworkSample(std::move(adj));
}

Simulation simulate(const SimConfig& config) {
  config.validate();
  Simulation sim;
  ResbmFit& truth = sim.truth;
  truth.z_bar = draw_zbar(config);
  truth.t = TransitionMatrix::from_kappa(config.k, config.kappa);
  truth.z_members = perturb_members(truth.z_bar, truth.t, config.members, config.seed);
  truth.blocks = draw_block_params(config, truth.z_bar);
  sim.sample = draw_edges(truth.z_members, *truth.blocks, config.seed);

  truth.soft_z_bar = SoftAssignment::from_hard(truth.z_bar);
  for (const auto& z : truth.z_members) truth.soft_members.push_back(SoftAssignment::from_hard(z));
  truth.converged = true;
  truth.iterations = 0;
  return sim;
}

HardAssignment change_labels(const HardAssignment& z, int count, std::uint64_t seed) {
  if (count < 0 || count > z.n()) throw ValidationError("cannot change that many labels");
  if (z.k() < 2 && count > 0) throw ValidationError("changing labels needs k >= 2");
  Philox rng = make_stream(seed, StreamTag::zbar, 1);
  std::vector<int> idx(static_cast<size_t>(z.n()));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> labels = z.labels();
  for (int c = 0; c < count; ++c) {
    const auto j = c + static_cast<int>(rng.below(static_cast<std::uint32_t>(z.n() - c)));
    std::swap(idx[static_cast<size_t>(c)], idx[static_cast<size_t>(j)]);
    const int node = idx[static_cast<size_t>(c)];
    const int shift = 1 + static_cast<int>(rng.below(static_cast<std::uint32_t>(z.k() - 1)));
    labels[static_cast<size_t>(node)] = (labels[static_cast<size_t>(node)] + shift) % z.k();
  }
  return HardAssignment(std::move(labels), z.k());
}

TwoGroupSimulation simulate_two_groups(const SimConfig& config, int m_a, int m_b, int changed) {
  if (m_a < 1 || m_b < 1) throw ValidationError("each group needs at least one member");
  SimConfig joint = config;
  joint.members = m_a + m_b;
  joint.validate();
  const HardAssignment zbar_a = draw_zbar(joint);
  const HardAssignment zbar_b = change_labels(zbar_a, changed, joint.seed);
  const TransitionMatrix t = TransitionMatrix::from_kappa(joint.k, joint.kappa);
  const BlockParams blocks = draw_block_params(joint, zbar_a);

  auto build = [&](const HardAssignment& zbar, int first, int count, std::uint64_t salt) {
    Simulation sim;
    ResbmFit& truth = sim.truth;
    truth.z_bar = zbar;
    truth.t = t;
    truth.z_members = perturb_members(zbar, t, count, mix_seed(joint.seed, salt));
    BlockParams part;
    part.alpha = blocks.alpha;
    part.pi.assign(blocks.pi.begin() + first, blocks.pi.begin() + first + count);
    truth.blocks = part;
    sim.sample = draw_edges(truth.z_members, part, mix_seed(joint.seed, salt + 1));
    truth.soft_z_bar = SoftAssignment::from_hard(zbar);
    for (const auto& z : truth.z_members) truth.soft_members.push_back(SoftAssignment::from_hard(z));
    truth.converged = true;
    return sim;
  };
  return {build(zbar_a, 0, m_a, 1), build(zbar_b, m_a, m_b, 3)};
}

}  // namespace resbm
