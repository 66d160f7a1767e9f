#include "resbm/inference.hpp"

#include "resbm/baselines.hpp"
#include "resbm/error.hpp"
#include "resbm/metrics.hpp"
#include "resbm/parallel.hpp"
#include "resbm/rng.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

namespace resbm {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::varem: return "varem";
    case Estimator::co_osntf: return "co-osntf";
    case Estimator::co_spectral: return "co-spectral";
    case Estimator::spectral_k: return "spectralk";
  }
  return "?";
}

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::muv: return "muv";
    case Statistic::sine: return "sine";
    case Statistic::muv_node: return "muv-node";
  }
  return "?";
}

std::string to_string(Correction c) {
  return c == Correction::bh_fdr ? "bh-fdr" : "holm-fwer";
}

Estimator parse_estimator(const std::string& s) {
  for (auto e : {Estimator::varem, Estimator::co_osntf, Estimator::co_spectral, Estimator::spectral_k})
    if (to_string(e) == s) return e;
  throw ValidationError("unknown estimator '" + s + "'");
}

Statistic parse_statistic(const std::string& s) {
  for (auto v : {Statistic::muv, Statistic::sine, Statistic::muv_node})
    if (to_string(v) == s) return v;
  throw ValidationError("unknown statistic '" + s + "'");
}

Correction parse_correction(const std::string& s) {
  for (auto c : {Correction::bh_fdr, Correction::holm_fwer})
    if (to_string(c) == s) return c;
  throw ValidationError("unknown correction '" + s + "'");
}

ResbmFit run_estimator(const EstimatorConfig& config, const NetworkSample& sample, int k,
                       std::uint64_t seed) {
  switch (config.kind) {
    case Estimator::varem: {
      VarEmOptions o = config.varem;
      o.seed = seed;
      return fit_varem(sample, k, o);
    }
    case Estimator::co_osntf: {
      CoOsntfOptions o = config.co_osntf;
      o.seed = seed;
      return fit_co_osntf(sample, k, o);
    }
    case Estimator::co_spectral: {
      CoSpectralOptions o = config.co_spectral;
      o.seed = seed;
      return fit_co_spectral(sample, k, o);
    }
    case Estimator::spectral_k:
      return fit_spectral_k(sample, k, seed);
  }
  throw ValidationError("unknown estimator");
}

namespace {

void check_same_shape(const HardAssignment& a, const HardAssignment& b) {
  if (a.n() != b.n() || a.k() != b.k())
    throw ValidationError("group assignments differ in n or k");
}

// Gram matrix T T^T with every entry summed in sorted order, so that relabeling communities
// permutes the entries without changing any of them.
Matrix sorted_gram(const Matrix& t) {
  const int k = static_cast<int>(t.rows());
  Matrix g(k, k);
  std::vector<double> terms(static_cast<size_t>(t.cols()));
  for (int q = 0; q < k; ++q) {
    for (int p = 0; p < k; ++p) {
      for (int l = 0; l < t.cols(); ++l) terms[static_cast<size_t>(l)] = t(q, l) * t(p, l);
      std::sort(terms.begin(), terms.end());
      double s = 0.0;
      for (double x : terms) s += x;
      g(q, p) = s;
    }
  }
  return g;
}

}  // namespace

double sine_statistic(const HardAssignment& zbar_a, const HardAssignment& zbar_b) {
  check_same_shape(zbar_a, zbar_b);
  const auto sa = zbar_a.sizes();
  const auto sb = zbar_b.sizes();
  for (int q = 0; q < zbar_a.k(); ++q)
    if (sa[static_cast<size_t>(q)] == 0 || sb[static_cast<size_t>(q)] == 0)
      throw ValidationError("sine statistic needs every community non-empty in both groups");
  const int n = zbar_a.n();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double pa = zbar_a[i] == zbar_a[j] ? 1.0 / sa[static_cast<size_t>(zbar_a[i])] : 0.0;
      const double pb = zbar_b[i] == zbar_b[j] ? 1.0 / sb[static_cast<size_t>(zbar_b[i])] : 0.0;
      total += (pa - pb) * (pa - pb);
    }
  }
  return 0.5 * total;
}

double muv_statistic(const HardAssignment& zbar_a, const TransitionMatrix& t_a,
                     const HardAssignment& zbar_b, const TransitionMatrix& t_b) {
  check_same_shape(zbar_a, zbar_b);
  if (t_a.k() != zbar_a.k() || t_b.k() != zbar_b.k())
    throw ValidationError("transition matrix size does not match k");
  const Matrix ga = sorted_gram(t_a.matrix());
  const Matrix gb = sorted_gram(t_b.matrix());
  const int n = zbar_a.n();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = ga(zbar_a[i], zbar_a[j]) - gb(zbar_b[i], zbar_b[j]);
      total += d * d;
    }
  }
  return total;
}

Vector muv_node_statistic(const HardAssignment& zbar_a, const TransitionMatrix& t_a,
                          const HardAssignment& zbar_b, const TransitionMatrix& t_b,
                          const std::vector<int>& sigma) {
  check_same_shape(zbar_a, zbar_b);
  const int k = zbar_a.k();
  if (static_cast<int>(sigma.size()) != k) throw ValidationError("alignment has wrong length");
  std::vector<int> inverse(static_cast<size_t>(k), -1);
  for (int q = 0; q < k; ++q) {
    const int s = sigma[static_cast<size_t>(q)];
    if (s < 0 || s >= k || inverse[static_cast<size_t>(s)] != -1)
      throw ValidationError("alignment is not a permutation");
    inverse[static_cast<size_t>(s)] = q;
  }
  const HardAssignment zb = zbar_b.relabeled(inverse);
  const TransitionMatrix tb = t_b.relabeled(inverse);
  Vector out(zbar_a.n());
  for (int i = 0; i < zbar_a.n(); ++i) {
    double s = 0.0;
    for (int l = 0; l < k; ++l) {
      const double d = t_a(zbar_a[i], l) - tb(zb[i], l);
      s += d * d;
    }
    out(i) = s;
  }
  return out;
}

Vector muv_node_statistic_aligned(const HardAssignment& zbar_a, const TransitionMatrix& t_a,
                                  const HardAssignment& zbar_b, const TransitionMatrix& t_b) {
  const Alignment al = align_labels(zbar_a, zbar_b);
  return muv_node_statistic(zbar_a, t_a, zbar_b, t_b, al.sigma);
}

Adjusted adjust_pvalues(const Vector& p, Correction method, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("significance level must be in (0, 1)");
  const int m = static_cast<int>(p.size());
  for (int i = 0; i < m; ++i)
    if (!(p(i) > 0.0 && p(i) <= 1.0)) throw ValidationError("p-values must lie in (0, 1]");
  std::vector<int> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p(a) < p(b); });

  Adjusted out;
  out.adjusted = Vector(m);
  if (method == Correction::bh_fdr) {
    double running = 1.0;
    for (int r = m - 1; r >= 0; --r) {
      const int i = order[static_cast<size_t>(r)];
      running = std::min(running, std::min(1.0, p(i) * m / (r + 1)));
      out.adjusted(i) = running;
    }
  } else {
    double running = 0.0;
    for (int r = 0; r < m; ++r) {
      const int i = order[static_cast<size_t>(r)];
      running = std::max(running, std::min(1.0, p(i) * (m - r)));
      out.adjusted(i) = running;
    }
  }
  out.rejected.assign(static_cast<size_t>(m), false);
  int count = 0;
  if (method == Correction::bh_fdr) {
    for (int r = 1; r <= m; ++r)
      if (p(order[static_cast<size_t>(r - 1)]) <= level * r / m) count = r;
  } else {
    while (count < m && p(order[static_cast<size_t>(count)]) <= level / (m - count)) ++count;
  }
  for (int r = 0; r < count; ++r) out.rejected[static_cast<size_t>(order[static_cast<size_t>(r)])] = true;
  return out;
}

namespace {

struct GroupFits {
  ResbmFit a;
  ResbmFit b;
};

Vector compute_statistic(Statistic s, const GroupFits& f) {
  switch (s) {
    case Statistic::sine: {
      Vector v(1);
      v(0) = sine_statistic(f.a.z_bar, f.b.z_bar);
      return v;
    }
    case Statistic::muv: {
      Vector v(1);
      v(0) = muv_statistic(f.a.z_bar, f.a.t, f.b.z_bar, f.b.t);
      return v;
    }
    case Statistic::muv_node:
      return muv_node_statistic_aligned(f.a.z_bar, f.a.t, f.b.z_bar, f.b.t);
  }
  throw ValidationError("unknown statistic");
}

std::vector<Vector> fit_and_score(const NetworkSample& a, const NetworkSample& b, int k,
                                  const EstimatorConfig& estimator,
                                  const std::vector<Statistic>& statistics, std::uint64_t seed_a,
                                  std::uint64_t seed_b) {
  GroupFits f{run_estimator(estimator, a, k, seed_a), run_estimator(estimator, b, k, seed_b)};
  std::vector<Vector> out;
  out.reserve(statistics.size());
  for (auto s : statistics) out.push_back(compute_statistic(s, f));
  return out;
}

}  // namespace

std::vector<TestResult> permutation_test(const NetworkSample& sample_a,
                                         const NetworkSample& sample_b, int k,
                                         const EstimatorConfig& estimator,
                                         const std::vector<Statistic>& statistics,
                                         const PermutationOptions& options) {
  const int m1 = sample_a.size();
  const int m2 = sample_b.size();
  if (m1 < 2 || m2 < 2) throw ValidationError("each group needs at least two networks");
  if (sample_a.n() != sample_b.n()) throw ValidationError("groups have different node counts");
  if (options.n_resamples < 1) throw ValidationError("n_resamples must be positive");
  if (statistics.empty()) throw ValidationError("no statistic requested");

  const std::vector<Vector> observed =
      fit_and_score(sample_a, sample_b, k, estimator, statistics, mix_seed(options.seed, 0),
                    mix_seed(options.seed, 1));

  const NetworkSample pooled = NetworkSample::concat(sample_a, sample_b);
  const int total = m1 + m2;
  const int R = options.n_resamples;
  std::vector<std::optional<std::vector<Vector>>> null_results(static_cast<size_t>(R));

  parallel_for(R, options.workers, [&](int r) {
    for (std::uint32_t attempt = 0; attempt < 2; ++attempt) {
      Philox rng = make_stream(options.seed, StreamTag::resample, static_cast<std::uint32_t>(r),
                               attempt);
      std::vector<int> order(static_cast<size_t>(total));
      std::iota(order.begin(), order.end(), 0);
      for (int i = total - 1; i > 0; --i)
        std::swap(order[static_cast<size_t>(i)],
                  order[rng.below(static_cast<std::uint32_t>(i + 1))]);
      std::vector<int> ia(order.begin(), order.begin() + m1);
      std::vector<int> ib(order.begin() + m1, order.end());
      std::sort(ia.begin(), ia.end());
      std::sort(ib.begin(), ib.end());
      const std::uint64_t seed_a = rng.next_u64();
      const std::uint64_t seed_b = rng.next_u64();
      try {
        null_results[static_cast<size_t>(r)] = fit_and_score(
            pooled.subset(ia), pooled.subset(ib), k, estimator, statistics, seed_a, seed_b);
        return;
      } catch (const Error&) {
      }
    }
  });

  std::vector<TestResult> results(statistics.size());
  for (size_t s = 0; s < statistics.size(); ++s) {
    TestResult& res = results[s];
    res.statistic = statistics[s];
    res.estimator = estimator.kind;
    res.observed = observed[s];
    res.n_resamples = R;
    res.seed = options.seed;
    for (const auto& nr : null_results) {
      if (nr) res.null_samples.push_back((*nr)[s]);
      else ++res.n_skipped;
    }
    if (res.null_samples.empty())
      throw InferenceError("every resample failed; no null distribution");
    const Vector& obs = res.observed;
    Vector count = Vector::Zero(obs.size());
    for (const Vector& v : res.null_samples)
      for (int i = 0; i < obs.size(); ++i)
        if (v(i) >= obs(i)) count(i) += 1.0;
    res.p_value = (count.array() + 1.0) / (1.0 + res.n_used());
  }
  return results;
}

TestResult permutation_test(const NetworkSample& sample_a, const NetworkSample& sample_b, int k,
                            const EstimatorConfig& estimator, Statistic statistic,
                            const PermutationOptions& options) {
  return permutation_test(sample_a, sample_b, k, estimator, std::vector<Statistic>{statistic},
                          options)
      .front();
}

}  // namespace resbm
