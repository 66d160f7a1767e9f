#include "resbm/twostep.hpp"

#include "resbm/baselines.hpp"
#include "resbm/error.hpp"
#include "resbm/graph.hpp"
#include "resbm/metrics.hpp"
#include "resbm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace resbm {

namespace {

// X <- X * sqrt(num / max(den, floor)), elementwise.
Matrix multiplicative_step(const Matrix& x, const Matrix& num, const Matrix& den, const char* what) {
  Matrix out = x.array() * (num.array() / den.array().max(kDenominatorFloor)).sqrt();
  if (!out.allFinite()) throw EstimationError(std::string("non-finite value in ") + what + " update");
  return out;
}

Matrix s_rule(const Matrix& u, const Matrix& s, const Matrix& lu) {
  const Matrix gram = u.transpose() * u;
  const Matrix num = u.transpose() * lu;
  const Matrix den = gram * s * gram;
  return multiplicative_step(s, num, den, "S");
}

Matrix u_rule(const Matrix& u, const Matrix& s, const Matrix& lu, const Matrix& u_star,
              double lambda) {
  const Matrix lus = lu * s;
  Matrix num = lus;
  Matrix den = u * (u.transpose() * lus);
  if (lambda != 0.0) {
    const Matrix cross = u_star.transpose() * u;  // k x k, U*^T U
    num.noalias() += lambda * (u_star * cross);
    den.noalias() += lambda * (u * (cross.transpose() * cross));
  }
  return multiplicative_step(u, num, den, "U");
}

bool any_positive(const std::vector<double>& lambda) {
  return std::any_of(lambda.begin(), lambda.end(), [](double l) { return l > 0.0; });
}

Matrix u_star_rule(const std::vector<Matrix>& u_members, const Matrix& u_star,
                   const std::vector<double>& lambda) {
  const Eigen::Index n = u_star.rows();
  const Eigen::Index k = u_star.cols();
  Matrix num = Matrix::Zero(n, k);
  Matrix proj_u_star = Matrix::Zero(n, k);  // sum_m lambda U U^T U*
  for (size_t m = 0; m < u_members.size(); ++m) {
    if (lambda[m] == 0.0) continue;
    const Matrix& u = u_members[m];
    proj_u_star.noalias() += lambda[m] * (u * (u.transpose() * u_star));
  }
  num = proj_u_star;
  const Matrix den = u_star * (u_star.transpose() * proj_u_star);
  return multiplicative_step(u_star, num, den, "U*");
}

double orthogonality_gap(const Matrix& u) {
  const Eigen::Index k = u.cols();
  return (u.transpose() * u - Matrix::Identity(k, k)).norm();
}

// Objective through traces, reusing L U:
// ||L - U S U^T||^2 = ||L||^2 - 2 tr(U^T L U S) + tr(S^T G S G), G = U^T U.
double cached_objective(const FactorState& st, const std::vector<double>& l_norm2,
                        const std::vector<Matrix>& lu) {
  double total = 0.0;
  for (int m = 0; m < st.members(); ++m) {
    const Matrix& u = st.u_members[static_cast<size_t>(m)];
    const Matrix& s = st.s_members[static_cast<size_t>(m)];
    const Matrix gram = u.transpose() * u;
    const double cross = ((u.transpose() * lu[static_cast<size_t>(m)]).array() * s.array()).sum();
    const double quad = ((s.transpose() * gram * s).array() * gram.array()).sum();
    total += l_norm2[static_cast<size_t>(m)] - 2.0 * cross + quad;
    const double lam = st.lambda[static_cast<size_t>(m)];
    if (lam != 0.0) {
      total += lam * (static_cast<double>(u.cols()) - (u.transpose() * st.u_star).squaredNorm());
    }
  }
  return total;
}

double max_gap(const FactorState& st) {
  double g = any_positive(st.lambda) ? orthogonality_gap(st.u_star) : 0.0;
  for (const Matrix& u : st.u_members) g = std::max(g, orthogonality_gap(u));
  return g;
}

void check_shapes(const FactorState& state, const std::vector<Matrix>& laplacians) {
  if (static_cast<int>(laplacians.size()) != state.members() ||
      state.s_members.size() != state.u_members.size() ||
      state.lambda.size() != state.u_members.size()) {
    throw ValidationError("factor state and Laplacians disagree on member count");
  }
  for (int m = 0; m < state.members(); ++m) {
    const Matrix& u = state.u_members[static_cast<size_t>(m)];
    const Matrix& l = laplacians[static_cast<size_t>(m)];
    if (l.rows() != u.rows() || l.cols() != u.rows() || u.cols() != state.u_star.cols() ||
        u.rows() != state.u_star.rows() || state.s_members[static_cast<size_t>(m)].rows() != u.cols() ||
        state.s_members[static_cast<size_t>(m)].cols() != u.cols()) {
      throw ValidationError("factor dimensions are inconsistent");
    }
  }
}

std::vector<double> broadcast_lambda(const std::vector<double>& lambda, int members) {
  if (lambda.size() == 1) return std::vector<double>(static_cast<size_t>(members), lambda.front());
  if (static_cast<int>(lambda.size()) != members) {
    throw ValidationError("lambda must have one value or one per member");
  }
  for (double l : lambda) {
    if (!(l >= 0.0)) throw ValidationError("lambda must be non-negative");
  }
  return lambda;
}

// Runs the multiplicative updates to convergence from `state`; returns whether it converged.
bool run_factorization(FactorState& st, const std::vector<Matrix>& laplacians, int max_iter,
                       double tol, int* iterations) {
  const int members = st.members();
  std::vector<double> l_norm2(static_cast<size_t>(members));
  std::vector<Matrix> lu(static_cast<size_t>(members));
  for (int m = 0; m < members; ++m) {
    l_norm2[static_cast<size_t>(m)] = laplacians[static_cast<size_t>(m)].squaredNorm();
    lu[static_cast<size_t>(m)].noalias() =
        laplacians[static_cast<size_t>(m)] * st.u_members[static_cast<size_t>(m)];
  }
  const bool coupled = any_positive(st.lambda);
  double prev = cached_objective(st, l_norm2, lu);
  st.objective_trace.push_back(prev);
  st.orthogonality_gap.push_back(max_gap(st));
  for (int it = 1; it <= max_iter; ++it) {
    for (int m = 0; m < members; ++m) {
      auto& s = st.s_members[static_cast<size_t>(m)];
      s = s_rule(st.u_members[static_cast<size_t>(m)], s, lu[static_cast<size_t>(m)]);
    }
    for (int m = 0; m < members; ++m) {
      auto& u = st.u_members[static_cast<size_t>(m)];
      u = u_rule(u, st.s_members[static_cast<size_t>(m)], lu[static_cast<size_t>(m)], st.u_star,
                 st.lambda[static_cast<size_t>(m)]);
    }
    if (coupled) st.u_star = u_star_rule(st.u_members, st.u_star, st.lambda);
    for (int m = 0; m < members; ++m) {
      lu[static_cast<size_t>(m)].noalias() =
          laplacians[static_cast<size_t>(m)] * st.u_members[static_cast<size_t>(m)];
    }
    const double obj = cached_objective(st, l_norm2, lu);
    if (!std::isfinite(obj)) throw EstimationError("Co-OSNTF objective is not finite", it);
    st.objective_trace.push_back(obj);
    st.orthogonality_gap.push_back(max_gap(st));
    *iterations = it;
    if (std::abs(prev - obj) <= tol * std::max(std::abs(prev), 1e-12)) return true;
    prev = obj;
  }
  return false;
}

Matrix abs_normal_columns(Philox& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix x(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) x(r, c) = std::abs(rng.normal());
    const double nrm = x.col(c).norm();
    if (nrm > 0.0) x.col(c) /= nrm;
  }
  return x;
}

}  // namespace

double co_osntf_objective(const FactorState& state, const std::vector<Matrix>& laplacians) {
  check_shapes(state, laplacians);
  double total = 0.0;
  const double k = static_cast<double>(state.u_star.cols());
  for (int m = 0; m < state.members(); ++m) {
    const Matrix& u = state.u_members[static_cast<size_t>(m)];
    const Matrix resid =
        laplacians[static_cast<size_t>(m)] - u * state.s_members[static_cast<size_t>(m)] * u.transpose();
    total += resid.squaredNorm() +
             state.lambda[static_cast<size_t>(m)] * (k - (u.transpose() * state.u_star).squaredNorm());
  }
  return total;
}

Matrix update_s(const FactorState& state, const std::vector<Matrix>& laplacians, int m) {
  check_shapes(state, laplacians);
  const Matrix& u = state.u_members.at(static_cast<size_t>(m));
  return s_rule(u, state.s_members[static_cast<size_t>(m)], laplacians[static_cast<size_t>(m)] * u);
}

Matrix update_u_member(const FactorState& state, const std::vector<Matrix>& laplacians, int m) {
  check_shapes(state, laplacians);
  const Matrix& u = state.u_members.at(static_cast<size_t>(m));
  return u_rule(u, state.s_members[static_cast<size_t>(m)], laplacians[static_cast<size_t>(m)] * u,
                state.u_star, state.lambda[static_cast<size_t>(m)]);
}

Matrix update_u_star(const FactorState& state) {
  if (!any_positive(state.lambda)) return state.u_star;
  return u_star_rule(state.u_members, state.u_star, state.lambda);
}

void osntf_sweep(FactorState& state, const std::vector<Matrix>& laplacians) {
  check_shapes(state, laplacians);
  for (int m = 0; m < state.members(); ++m) {
    state.s_members[static_cast<size_t>(m)] = update_s(state, laplacians, m);
  }
  for (int m = 0; m < state.members(); ++m) {
    state.u_members[static_cast<size_t>(m)] = update_u_member(state, laplacians, m);
  }
  state.u_star = update_u_star(state);
  state.objective_trace.push_back(co_osntf_objective(state, laplacians));
  state.orthogonality_gap.push_back(max_gap(state));
}

FactorState init_factor_state(int n, int k, const std::vector<double>& lambda, std::uint64_t seed,
                              int restart) {
  FactorState st;
  st.lambda = lambda;
  const int members = static_cast<int>(lambda.size());
  for (int m = 0; m <= members; ++m) {
    Philox rng = make_stream(seed, StreamTag::osntf_restart, static_cast<std::uint32_t>(restart),
                             static_cast<std::uint32_t>(m));
    Matrix u = abs_normal_columns(rng, n, k);
    if (m == members) {
      st.u_star = std::move(u);
    } else {
      Matrix s = abs_normal_columns(rng, k, k);
      st.u_members.push_back(std::move(u));
      st.s_members.push_back(0.5 * (s + s.transpose()));
    }
  }
  return st;
}

FactorState labels_factor_state(const std::vector<Matrix>& laplacians,
                                const std::vector<HardAssignment>& members,
                                const HardAssignment& mean, const std::vector<double>& lambda,
                                double offset) {
  if (members.size() != laplacians.size() || lambda.size() != members.size())
    throw ValidationError("labels, Laplacians and lambda disagree on member count");
  if (!(offset > 0.0)) throw ValidationError("offset must be positive");
  auto start = [&](const HardAssignment& z) {
    Matrix u = Matrix::Constant(z.n(), z.k(), offset);
    for (int i = 0; i < z.n(); ++i) u(i, z[i]) += 1.0;
    for (Eigen::Index c = 0; c < u.cols(); ++c) u.col(c) /= u.col(c).norm();
    return u;
  };
  FactorState st;
  st.lambda = lambda;
  st.u_star = start(mean);
  for (size_t m = 0; m < members.size(); ++m) {
    Matrix u = start(members[m]);
    st.s_members.push_back(u.transpose() * laplacians[m] * u);
    st.u_members.push_back(std::move(u));
  }
  return st;
}

CoOsntfResult fit_co_osntf_detailed(const NetworkSample& sample, int k, const CoOsntfOptions& options) {
  if (k < 1 || k > sample.n()) throw ValidationError("need 1 <= k <= n");
  const std::vector<double> lambda = broadcast_lambda(options.lambda, sample.size());
  std::vector<Matrix> laps;
  laps.reserve(static_cast<size_t>(sample.size()));
  for (const Matrix& a : sample.adjacency()) laps.push_back(laplacian(a));

  const bool coupled = any_positive(lambda);
  struct Candidate {
    FactorState state;
    bool converged;
    int iterations;
    double objective;
  };
  std::vector<Candidate> candidates;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    FactorState st;
    if (r == 0 && options.spectral_start) {
      try {
        const HardAssignment mean = spectral_k(sample, k, options.seed);
        std::vector<HardAssignment> members;
        for (const auto& z : ind_spectral(sample, k, options.seed))
          members.push_back(align_labels(mean, z).relabeled);
        st = labels_factor_state(laps, members, mean, lambda, options.spectral_offset);
      } catch (const Error&) {
        st = init_factor_state(sample.n(), k, lambda, options.seed, r);
      }
    } else {
      st = init_factor_state(sample.n(), k, lambda, options.seed, r);
    }
    int iters = 0;
    const bool conv = run_factorization(st, laps, options.max_iter, options.tol, &iters);
    const double obj = st.objective_trace.back();
    candidates.push_back({std::move(st), conv, iters, obj});
  }

  // Best objective among restarts whose mean labels fill every community.
  const Candidate* best = nullptr;
  for (const Candidate& c : candidates) {
    const auto sizes = HardAssignment::argmax(c.state.u_star).sizes();
    const bool full = std::all_of(sizes.begin(), sizes.end(), [](int s) { return s > 0; });
    if (!full) continue;
    if (!best || c.objective < best->objective) best = &c;
  }
  if (!best) throw EstimationError("Co-OSNTF left a mean community empty in every restart");

  CoOsntfResult out;
  out.state = best->state;
  ResbmFit& fit = out.fit;
  fit.z_bar = HardAssignment::argmax(out.state.u_star);
  fit.soft_z_bar = SoftAssignment::normalize_rows(out.state.u_star);
  for (int m = 0; m < sample.size(); ++m) {
    const Matrix& u = out.state.u_members[static_cast<size_t>(m)];
    const Alignment al = align_labels(fit.z_bar, HardAssignment::argmax(u));
    const std::vector<int> map = al.candidate_map();
    Matrix permuted(u.rows(), u.cols());
    for (int l = 0; l < k; ++l) permuted.col(map[static_cast<size_t>(l)]) = u.col(l);
    fit.z_members.push_back(al.relabeled);
    fit.soft_members.push_back(SoftAssignment::normalize_rows(std::move(permuted)));
  }
  fit.t = conditional_mle(fit.z_bar, fit.z_members);
  fit.objective_trace = out.state.objective_trace;
  fit.converged = best->converged;
  fit.iterations = best->iterations;
  if (!coupled) fit.warnings.push_back("all lambda are zero: the mean factor U* is arbitrary");
  if (!fit.converged) fit.warnings.push_back("Co-OSNTF reached max_iter without converging");
  return out;
}

ResbmFit fit_co_osntf(const NetworkSample& sample, int k, const CoOsntfOptions& options) {
  return fit_co_osntf_detailed(sample, k, options).fit;
}

HardAssignment osntf_single(const Matrix& adjacency, int k, std::uint64_t seed, int restarts) {
  if (k < 1 || k > adjacency.rows()) throw ValidationError("need 1 <= k <= n");
  const std::vector<Matrix> laps{laplacian(adjacency)};
  const std::vector<double> lambda{0.0};
  double best_obj = std::numeric_limits<double>::infinity();
  Matrix best_u;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    FactorState st;
    if (r == 0) {
      try {
        const HardAssignment z = spectral_single(adjacency, k, seed);
        st = labels_factor_state(laps, {z}, z, lambda, 0.1);
      } catch (const Error&) {
        st = init_factor_state(static_cast<int>(adjacency.rows()), k, lambda, seed, r);
      }
    } else {
      st = init_factor_state(static_cast<int>(adjacency.rows()), k, lambda, seed, r);
    }
    int iters = 0;
    run_factorization(st, laps, 2000, 1e-7, &iters);
    if (st.objective_trace.back() < best_obj) {
      best_obj = st.objective_trace.back();
      best_u = st.u_members.front();
    }
  }
  return HardAssignment::argmax(best_u);
}

ResbmFit fit_co_spectral(const NetworkSample& sample, int k, const CoSpectralOptions& options) {
  if (k < 1 || k > sample.n()) throw ValidationError("need 1 <= k <= n");
  if (!(options.gamma >= 0.0)) throw ValidationError("gamma must be non-negative");
  const int members = sample.size();
  const int n = sample.n();
  std::vector<Matrix> laps;
  std::vector<Matrix> u(static_cast<size_t>(members));
  for (int m = 0; m < members; ++m) {
    laps.push_back(laplacian(sample[m]));
    u[static_cast<size_t>(m)] = top_eigenvectors(laps.back(), k);
  }
  const double gamma = options.gamma;
  auto consensus = [&]() {
    Matrix acc = Matrix::Zero(n, n);
    for (const Matrix& um : u) acc.noalias() += um * um.transpose();
    return top_eigenvectors(gamma > 0.0 ? Matrix(gamma * acc) : acc, k);
  };
  auto objective = [&](const Matrix& u_star) {
    double total = 0.0;
    for (int m = 0; m < members; ++m) {
      const Matrix& um = u[static_cast<size_t>(m)];
      total += (um.transpose() * laps[static_cast<size_t>(m)] * um).trace() +
               gamma * (um.transpose() * u_star).squaredNorm();
    }
    return total;
  };

  Matrix u_star = consensus();
  ResbmFit fit;
  double prev = objective(u_star);
  fit.objective_trace.push_back(prev);
  fit.converged = gamma == 0.0;
  for (int it = 1; it <= options.max_iter && gamma > 0.0; ++it) {
    const Matrix pull = gamma * (u_star * u_star.transpose());
    for (int m = 0; m < members; ++m) {
      u[static_cast<size_t>(m)] = top_eigenvectors(laps[static_cast<size_t>(m)] + pull, k);
    }
    u_star = consensus();
    const double obj = objective(u_star);
    if (!std::isfinite(obj)) throw EstimationError("Co-Spectral objective is not finite", it);
    fit.objective_trace.push_back(obj);
    fit.iterations = it;
    if (std::abs(obj - prev) <= options.tol * std::max(std::abs(prev), 1e-12)) {
      fit.converged = true;
      break;
    }
    prev = obj;
  }

  fit.z_bar = cluster_embedding_rows(u_star, k, options.seed);
  fit.soft_z_bar = SoftAssignment::from_hard(fit.z_bar);
  for (int m = 0; m < members; ++m) {
    const HardAssignment zm = cluster_embedding_rows(u[static_cast<size_t>(m)], k, options.seed);
    fit.z_members.push_back(align_labels(fit.z_bar, zm).relabeled);
    fit.soft_members.push_back(SoftAssignment::from_hard(fit.z_members.back()));
  }
  fit.t = conditional_mle(fit.z_bar, fit.z_members);
  if (!fit.converged) fit.warnings.push_back("Co-Spectral reached max_iter without converging");
  return fit;
}

TransitionMatrix conditional_mle(const HardAssignment& z_bar,
                                 const std::vector<HardAssignment>& z_members) {
  if (z_members.empty()) throw ValidationError("conditional MLE needs at least one member");
  const int k = z_bar.k();
  std::vector<std::int64_t> counts(static_cast<size_t>(k * k), 0);
  for (const HardAssignment& z : z_members) {
    if (z.n() != z_bar.n() || z.k() != k) throw ValidationError("member assignment shape mismatch");
    for (int i = 0; i < z.n(); ++i) ++counts[static_cast<size_t>(z_bar[i] * k + z[i])];
  }
  Matrix t(k, k);
  for (int q = 0; q < k; ++q) {
    std::int64_t row = 0;
    for (int l = 0; l < k; ++l) row += counts[static_cast<size_t>(q * k + l)];
    if (row == 0) {
      throw EstimationError("mean community " + std::to_string(q) + " is empty; T row undefined");
    }
    for (int l = 0; l < k; ++l) {
      t(q, l) = static_cast<double>(counts[static_cast<size_t>(q * k + l)]) / static_cast<double>(row);
    }
  }
  return TransitionMatrix(std::move(t));
}

}  // namespace resbm
