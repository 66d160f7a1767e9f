#include "resbm/varem.hpp"

#include "resbm/baselines.hpp"
#include "resbm/error.hpp"
#include "resbm/metrics.hpp"
#include "resbm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace resbm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

// x log(y / x) with 0 log(.) = 0.
inline double xlog_ratio(double x, double log_y) { return x > 0.0 ? x * (log_y - std::log(x)) : 0.0; }

inline double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

void add_warning(std::vector<std::string>& warnings, std::string w) {
  if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(std::move(w));
}

// In-place softmax over a span; entries at -inf get probability zero.
void softmax(double* v, int len) {
  double mx = kNegInf;
  for (int i = 0; i < len; ++i) mx = std::max(mx, v[i]);
  if (!std::isfinite(mx)) {
    for (int i = 0; i < len; ++i) v[i] = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  double sum = 0.0;
  for (int i = 0; i < len; ++i) {
    v[i] = std::exp(v[i] - mx);
    sum += v[i];
  }
  for (int i = 0; i < len; ++i) v[i] /= sum;
}

struct LogBlocks {
  Matrix log_pi;
  Matrix log_one_minus;
};

std::vector<LogBlocks> log_blocks(const BlockParams& params) {
  std::vector<LogBlocks> out;
  out.reserve(params.pi.size());
  for (const Matrix& p : params.pi) {
    const Matrix c = p.unaryExpr([](double x) { return clamp_prob(x); });
    out.push_back({c.array().log().matrix(), (1.0 - c.array()).log().matrix()});
  }
  return out;
}

void check_sample(const VariationalState& s, const NetworkSample& sample) {
  if (sample.n() != s.n() || sample.size() != s.members() ||
      static_cast<int>(s.epsilon.size()) != s.members()) {
    throw ValidationError("variational state does not match the sample");
  }
}

Matrix soften_labels(const HardAssignment& z, double weight) {
  const int k = z.k();
  if (k == 1) return Matrix::Ones(z.n(), 1);
  Matrix m = Matrix::Constant(z.n(), k, (1.0 - weight) / (k - 1));
  for (int i = 0; i < z.n(); ++i) m(i, z[i]) = weight;
  return m;
}

Matrix jitter(const Matrix& soft, Philox& rng) {
  Matrix out = soft;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index q = 0; q < out.cols(); ++q) out(i, q) *= std::exp(rng.normal());
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

}  // namespace

void VariationalState::validate(double tol) const {
  const int kk = k();
  auto check_rows = [tol](const Matrix& m, const char* what) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if ((m.row(i).array() < 0.0).any() || std::abs(m.row(i).sum() - 1.0) > tol) {
        throw ValidationError(std::string(what) + " row is not normalized");
      }
    }
  };
  check_rows(tau_bar, "tau_bar");
  for (const Matrix& t : tau) check_rows(t, "tau");
  for (const Matrix& e : epsilon) {
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
      for (int q = 0; q < kk; ++q) {
        const auto block = e.row(i).segment(q * kk, kk);
        if ((block.array() < 0.0).any() || std::abs(block.sum() - 1.0) > tol) {
          throw ValidationError("epsilon slice is not normalized");
        }
      }
    }
  }
}

double bernoulli_kernel(int a, double pi) {
  const double p = clamp_prob(pi);
  return a == 1 ? p : 1.0 - p;
}

VariationalState ve_step(const VariationalState& state, const NetworkSample& sample) {
  check_sample(state, sample);
  VariationalState out = state;
  const int n = out.n();
  const int k = out.k();
  const int members = out.members();
  const int iteration = static_cast<int>(state.elbo_trace.size());
  const auto logs = log_blocks(out.params);

  Matrix log_t(k, k);
  for (int q = 0; q < k; ++q) {
    for (int l = 0; l < k; ++l) log_t(q, l) = safe_log(out.t(q, l));
  }
  Vector log_alpha(k);
  for (int q = 0; q < k; ++q) log_alpha(q) = safe_log(out.params.alpha(q));

  std::vector<Vector> colsum(static_cast<size_t>(members));
  for (int m = 0; m < members; ++m) colsum[static_cast<size_t>(m)] = out.tau[static_cast<size_t>(m)].colwise().sum();

  Matrix g(members, k);  // G^(m)_il for the current node
  std::vector<double> buf(static_cast<size_t>(k));
  Vector bar_logit(k);
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < members; ++m) {
      const Matrix& tau = out.tau[static_cast<size_t>(m)];
      // sum_{j != i} A_ij tau_j and sum_{j != i} (1 - A_ij) tau_j.
      const Vector edge = tau.transpose() * sample[m].col(i);
      const Vector non_edge = colsum[static_cast<size_t>(m)] - tau.row(i).transpose() - edge;
      g.row(m) = (logs[static_cast<size_t>(m)].log_pi * edge +
                  logs[static_cast<size_t>(m)].log_one_minus * non_edge)
                     .transpose();
    }

    bar_logit = log_alpha;
    for (int m = 0; m < members; ++m) {
      Matrix& eps = out.epsilon[static_cast<size_t>(m)];
      for (int q = 0; q < k; ++q) {
        for (int l = 0; l < k; ++l) buf[static_cast<size_t>(l)] = log_t(q, l) + g(m, l);
        softmax(buf.data(), k);
        double contrib = 0.0;
        for (int l = 0; l < k; ++l) {
          const double e = buf[static_cast<size_t>(l)];
          if (!std::isfinite(e)) throw EstimationError("non-finite epsilon in VE step", iteration);
          eps(i, q * k + l) = e;
          if (e > 0.0) contrib += xlog_ratio(e, log_t(q, l)) + e * g(m, l);
        }
        bar_logit(q) += contrib;
      }
    }
    for (int q = 0; q < k; ++q) buf[static_cast<size_t>(q)] = bar_logit(q);
    softmax(buf.data(), k);
    for (int q = 0; q < k; ++q) {
      if (!std::isfinite(buf[static_cast<size_t>(q)])) {
        throw EstimationError("non-finite tau_bar in VE step", iteration);
      }
      out.tau_bar(i, q) = buf[static_cast<size_t>(q)];
    }

    for (int m = 0; m < members; ++m) {
      Matrix& tau = out.tau[static_cast<size_t>(m)];
      const Matrix& eps = out.epsilon[static_cast<size_t>(m)];
      Vector row = Vector::Zero(k);
      for (int q = 0; q < k; ++q) {
        const double w = out.tau_bar(i, q);
        if (w == 0.0) continue;
        for (int l = 0; l < k; ++l) row(l) += w * eps(i, q * k + l);
      }
      row /= row.sum();
      colsum[static_cast<size_t>(m)] += row - tau.row(i).transpose();
      tau.row(i) = row.transpose();
    }
  }
  return out;
}

VariationalState m_step(const VariationalState& state, const NetworkSample& sample) {
  check_sample(state, sample);
  VariationalState out = state;
  const int k = out.k();
  const int members = out.members();

  if (!out.freeze_t) {
    Matrix counts = Matrix::Zero(k, k);
    for (int m = 0; m < members; ++m) {
      const Matrix& eps = out.epsilon[static_cast<size_t>(m)];
      for (int q = 0; q < k; ++q) {
        counts.row(q) += out.tau_bar.col(q).transpose() * eps.middleCols(q * k, k);
      }
    }
    Matrix t = out.t.matrix();
    for (int q = 0; q < k; ++q) {
      const double s = counts.row(q).sum();
      if (s < 1e-12) {
        add_warning(out.warnings, "T row " + std::to_string(q) + " has no mass; kept previous row");
        continue;
      }
      t.row(q) = counts.row(q) / s;
    }
    out.t = TransitionMatrix(std::move(t));
  }

  out.params.alpha = out.tau_bar.colwise().mean().transpose();
  out.params.alpha /= out.params.alpha.sum();

  // Ordered-pair sums over i != j: edges E = tau^T A tau, pairs P = s s^T - tau^T tau.
  std::vector<Matrix> edges(static_cast<size_t>(members)), pairs(static_cast<size_t>(members));
  Vector diag_edges = Vector::Zero(k), diag_pairs = Vector::Zero(k);
  for (int m = 0; m < members; ++m) {
    const Matrix& tau = out.tau[static_cast<size_t>(m)];
    const Vector s = tau.colwise().sum().transpose();
    edges[static_cast<size_t>(m)] = tau.transpose() * (sample[m] * tau);
    pairs[static_cast<size_t>(m)] = s * s.transpose() - tau.transpose() * tau;
    diag_edges += edges[static_cast<size_t>(m)].diagonal();
    diag_pairs += pairs[static_cast<size_t>(m)].diagonal();
  }
  out.params.pi.assign(static_cast<size_t>(members), Matrix(k, k));
  bool starved = false;
  for (int m = 0; m < members; ++m) {
    Matrix& p = out.params.pi[static_cast<size_t>(m)];
    const Matrix& e = edges[static_cast<size_t>(m)];
    const Matrix& d = pairs[static_cast<size_t>(m)];
    for (int q = 0; q < k; ++q) {
      for (int l = 0; l < k; ++l) {
        const double num = q == l ? diag_edges(q) : 0.5 * (e(q, l) + e(l, q));
        const double den = q == l ? diag_pairs(q) : 0.5 * (d(q, l) + d(l, q));
        if (den < 1e-12) {
          p(q, l) = kProbFloor;
          starved = true;
        } else {
          p(q, l) = clamp_prob(num / den);
        }
      }
    }
  }
  if (starved) add_warning(out.warnings, "a block had no effective pair mass; pi set to the floor");
  return out;
}

double elbo(const VariationalState& state, const NetworkSample& sample) {
  check_sample(state, sample);
  const int k = state.k();
  const auto logs = log_blocks(state.params);
  double total = 0.0;

  for (int q = 0; q < k; ++q) {
    const double la = safe_log(state.params.alpha(q));
    for (int i = 0; i < state.n(); ++i) total += xlog_ratio(state.tau_bar(i, q), la);
  }
  for (int m = 0; m < state.members(); ++m) {
    const Matrix& eps = state.epsilon[static_cast<size_t>(m)];
    for (int i = 0; i < state.n(); ++i) {
      for (int q = 0; q < k; ++q) {
        const double w = state.tau_bar(i, q);
        if (w == 0.0) continue;
        double inner = 0.0;
        for (int l = 0; l < k; ++l) inner += xlog_ratio(eps(i, q * k + l), safe_log(state.t(q, l)));
        total += w * inner;
      }
    }
    const Matrix& tau = state.tau[static_cast<size_t>(m)];
    const Vector s = tau.colwise().sum().transpose();
    const Matrix e = tau.transpose() * (sample[m] * tau);
    const Matrix p = s * s.transpose() - tau.transpose() * tau;
    total += 0.5 * ((e.array() * logs[static_cast<size_t>(m)].log_pi.array()).sum() +
                    ((p - e).array() * logs[static_cast<size_t>(m)].log_one_minus.array()).sum());
  }
  if (std::isnan(total)) throw EstimationError("ELBO is NaN");
  return total;
}

VariationalState init_state(const NetworkSample& sample, const Matrix& tau_bar,
                            const std::vector<Matrix>& tau, bool freeze_t) {
  const int k = static_cast<int>(tau_bar.cols());
  VariationalState st;
  st.freeze_t = freeze_t;
  st.tau_bar = tau_bar;
  st.tau = tau;
  st.t = TransitionMatrix::identity(k);
  st.params.alpha = Vector::Constant(k, 1.0 / k);
  st.params.pi.assign(static_cast<size_t>(sample.size()), Matrix::Constant(k, k, 0.5));
  for (const Matrix& t : tau) {
    Matrix eps(t.rows(), k * k);
    for (int q = 0; q < k; ++q) eps.middleCols(q * k, k) = t;
    st.epsilon.push_back(std::move(eps));
  }
  if (freeze_t) {
    // With T = I the conditionals are forced onto the mean label.
    for (auto& eps : st.epsilon) {
      eps.setZero();
      for (int q = 0; q < k; ++q) eps.col(q * k + q).setOnes();
    }
    for (auto& t : st.tau) t = tau_bar;
  }
  return m_step(st, sample);
}

VarEmResult fit_varem_detailed(const NetworkSample& sample, int k, const VarEmOptions& options) {
  if (k < 1) throw ValidationError("k must be at least 1");
  if (k > sample.n()) throw ValidationError("k exceeds the number of nodes");
  bool any_edge = false;
  for (const Matrix& a : sample.adjacency()) any_edge = any_edge || a.sum() > 0.0;
  if (!any_edge) throw ValidationError("every network in the sample is empty");

  HardAssignment z_bar0;
  std::vector<HardAssignment> z_members0;
  if (options.init) {
    if (options.init->k() != k || options.init->n() != sample.n() ||
        options.init->members() != sample.size()) {
      throw ValidationError("initial fit does not match the sample");
    }
    z_bar0 = options.init->z_bar;
    for (const auto& z : options.init->z_members) z_members0.push_back(align_labels(z_bar0, z).relabeled);
  } else {
    z_bar0 = spectral_k(sample, k, options.seed);
    for (const auto& z : ind_spectral(sample, k, options.seed)) {
      z_members0.push_back(align_labels(z_bar0, z).relabeled);
    }
  }
  const Matrix tau_bar0 = soften_labels(z_bar0, options.soften);
  std::vector<Matrix> tau0;
  for (const auto& z : z_members0) tau0.push_back(soften_labels(z, options.soften));

  std::optional<VarEmResult> best;
  double best_elbo = kNegInf;
  std::vector<std::string> failures;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    Matrix tb = tau_bar0;
    std::vector<Matrix> tm = tau0;
    if (r > 0) {
      Philox rng = make_stream(options.seed, StreamTag::varem_restart, static_cast<std::uint32_t>(r));
      tb = jitter(tb, rng);
      for (auto& t : tm) t = jitter(t, rng);
    }
    try {
      VariationalState st = init_state(sample, tb, tm, options.mlsbm);
      if (options.mlsbm) st.t = TransitionMatrix::identity(k);
      double prev = elbo(st, sample);
      st.elbo_trace.push_back(prev);
      bool converged = false;
      int iters = 0;
      for (int it = 1; it <= options.max_iter; ++it) {
        st = m_step(ve_step(st, sample), sample);
        const double cur = elbo(st, sample);
        st.elbo_trace.push_back(cur);
        iters = it;
        if (std::abs(cur - prev) <= options.tol * std::max(std::abs(prev), 1e-12)) {
          converged = true;
          break;
        }
        prev = cur;
      }
      if (st.elbo_trace.back() > best_elbo) {
        best_elbo = st.elbo_trace.back();
        VarEmResult res;
        res.fit.converged = converged;
        res.fit.iterations = iters;
        res.state = std::move(st);
        best = std::move(res);
      }
    } catch (const EstimationError& e) {
      failures.push_back(e.what());
    }
  }
  if (!best) throw EstimationError("every VarEM restart failed: " + failures.front());

  VarEmResult out = std::move(*best);
  const VariationalState& st = out.state;
  ResbmFit& fit = out.fit;
  fit.z_bar = HardAssignment::argmax(st.tau_bar);
  fit.t = st.t;
  fit.soft_z_bar = SoftAssignment::normalize_rows(st.tau_bar);
  for (const Matrix& t : st.tau) {
    fit.z_members.push_back(HardAssignment::argmax(t));
    fit.soft_members.push_back(SoftAssignment::normalize_rows(t));
  }
  fit.blocks = st.params;
  fit.objective_trace = st.elbo_trace;
  fit.warnings = st.warnings;
  if (!failures.empty()) fit.warnings.push_back(std::to_string(failures.size()) + " restart(s) failed");
  if (!fit.converged) fit.warnings.push_back("VarEM reached max_iter without converging");
  return out;
}

ResbmFit fit_varem(const NetworkSample& sample, int k, const VarEmOptions& options) {
  return fit_varem_detailed(sample, k, options).fit;
}

}  // namespace resbm
