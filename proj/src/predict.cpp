#include "resbm/predict.hpp"

#include "resbm/baselines.hpp"
#include "resbm/error.hpp"
#include "resbm/metrics.hpp"
#include "resbm/parallel.hpp"
#include "resbm/rng.hpp"
#include "resbm/twostep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace resbm {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of an empty set");
  std::sort(v.begin(), v.end());
  const size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

ExpectedAssignment expected_assignment(const ResbmFit& fit) {
  const Matrix& t = fit.t.matrix();
  const int k = fit.k();
  Matrix mean(fit.n(), k);
  for (int i = 0; i < fit.n(); ++i) mean.row(i) = t.row(fit.z_bar[i]);
  ExpectedAssignment out{SoftAssignment(std::move(mean)), {}, fit.z_bar};
  for (int q = 0; q < k; ++q) {
    const Vector row = t.row(q).transpose();
    Matrix cov = -row * row.transpose();
    cov.diagonal() += row;
    out.community_covariance.push_back(std::move(cov));
  }
  return out;
}

std::string to_string(SingleMethod m) { return m == SingleMethod::spectral ? "spectral" : "osntf"; }

SingleMethod parse_single_method(const std::string& s) {
  if (s == "spectral") return SingleMethod::spectral;
  if (s == "osntf") return SingleMethod::osntf;
  throw ValidationError("unknown single-network method '" + s + "'");
}

HardAssignment estimate_subject(const Matrix& adjacency, int k, SingleMethod method,
                                std::uint64_t seed) {
  if (method == SingleMethod::spectral) return spectral_single(adjacency, k, seed);
  return osntf_single(adjacency, k, seed);
}

PredictionReport prediction_error(const ResbmFit& fit, const NetworkSample& test_sample, int k,
                                  SingleMethod method, std::uint64_t seed, int workers) {
  if (test_sample.size() == 0) throw ValidationError("test sample is empty");
  if (test_sample.n() != fit.n()) throw ValidationError("test sample and fit differ in n");
  if (k != fit.k()) throw ValidationError("k does not match the fit");

  const int J = test_sample.size();
  std::vector<std::optional<HardAssignment>> aligned(static_cast<size_t>(J));
  parallel_for(J, workers, [&](int s) {
    const std::uint64_t subject_seed =
        make_stream(seed, StreamTag::subject, static_cast<std::uint32_t>(s)).next_u64();
    try {
      const HardAssignment u = estimate_subject(test_sample[s], k, method, subject_seed);
      aligned[static_cast<size_t>(s)] = align_labels(fit.z_bar, u).relabeled;
    } catch (const Error&) {
    }
  });

  PredictionReport report;
  report.u_bar = Matrix::Zero(fit.n(), k);
  for (const auto& u : aligned) {
    if (!u) {
      ++report.dropped;
      continue;
    }
    ++report.used;
    for (int i = 0; i < fit.n(); ++i) report.u_bar(i, (*u)[i]) += 1.0;
    int agree = 0;
    for (int i = 0; i < fit.n(); ++i) agree += (*u)[i] == fit.z_bar[i];
    report.subject_rates.push_back(static_cast<double>(agree) / fit.n());
  }
  if (report.used == 0) throw EstimationError("every test subject failed to cluster");
  report.u_bar /= report.used;

  const Matrix predicted = expected_assignment(fit).mean.matrix();
  std::vector<double> diffs;
  diffs.reserve(static_cast<size_t>(fit.n() * k));
  for (int i = 0; i < fit.n(); ++i)
    for (int q = 0; q < k; ++q) diffs.push_back(std::abs(report.u_bar(i, q) - predicted(i, q)));
  report.median_abs_error = median(std::move(diffs));
  report.mean_classification_rate =
      std::accumulate(report.subject_rates.begin(), report.subject_rates.end(), 0.0) /
      report.used;
  return report;
}

std::string to_string(Rule r) { return r == Rule::loglik ? "loglik" : "muv"; }

Rule parse_rule(const std::string& s) {
  if (s == "loglik") return Rule::loglik;
  if (s == "muv") return Rule::muv;
  throw ValidationError("unknown classification rule '" + s + "'");
}

double subject_loglik(const HardAssignment& u, const ResbmFit& fit) {
  if (u.n() != fit.n() || u.k() != fit.k()) throw ValidationError("subject does not match fit");
  const HardAssignment v = align_labels(fit.z_bar, u).relabeled;
  double s = 0.0;
  for (int i = 0; i < v.n(); ++i) s += std::log(std::max(fit.t(fit.z_bar[i], v[i]), kProbFloor));
  return s;
}

double subject_muv(const HardAssignment& u, const ResbmFit& fit) {
  if (u.n() != fit.n() || u.k() != fit.k()) throw ValidationError("subject does not match fit");
  const HardAssignment v = align_labels(fit.z_bar, u).relabeled;
  const Matrix& t = fit.t.matrix();
  const Matrix g = t * t.transpose();
  double s = 0.0;
  for (int i = 0; i < v.n(); ++i) {
    for (int j = 0; j < v.n(); ++j) {
      const double d = g(fit.z_bar[i], fit.z_bar[j]) - (v[i] == v[j] ? 1.0 : 0.0);
      s += d * d;
    }
  }
  return s;
}

Classification classify_subject(const HardAssignment& u, const ResbmFit& fit_a,
                                const ResbmFit& fit_b, Rule rule) {
  Classification c;
  if (rule == Rule::loglik) {
    c.score_a = subject_loglik(u, fit_a);
    c.score_b = subject_loglik(u, fit_b);
    c.group = c.score_b > c.score_a ? Group::b : Group::a;
  } else {
    c.score_a = subject_muv(u, fit_a);
    c.score_b = subject_muv(u, fit_b);
    c.group = c.score_b < c.score_a ? Group::b : Group::a;
  }
  c.tie = c.score_a == c.score_b;
  return c;
}

HoldoutSplit random_holdout(int members, int holdout, std::uint64_t seed, int repetition,
                            std::uint32_t salt) {
  if (holdout < 1 || holdout >= members)
    throw ValidationError("holdout must leave at least one member on each side");
  Philox rng = make_stream(seed, StreamTag::split, static_cast<std::uint32_t>(repetition), salt);
  std::vector<int> order(static_cast<size_t>(members));
  std::iota(order.begin(), order.end(), 0);
  for (int i = members - 1; i > 0; --i)
    std::swap(order[static_cast<size_t>(i)], order[rng.below(static_cast<std::uint32_t>(i + 1))]);
  HoldoutSplit out;
  out.test.assign(order.begin(), order.begin() + holdout);
  out.train.assign(order.begin() + holdout, order.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

std::vector<SplitComparison> split_validation(const NetworkSample& sample, int k,
                                              const EstimatorConfig& estimator, int repetitions,
                                              std::uint64_t seed, int workers) {
  if (sample.size() < 4) throw ValidationError("split validation needs at least four members");
  if (repetitions < 1) throw ValidationError("repetitions must be positive");
  std::vector<SplitComparison> out(static_cast<size_t>(repetitions));
  parallel_for(repetitions, workers, [&](int r) {
    const HoldoutSplit split = random_holdout(sample.size(), sample.size() / 2, seed, r);
    const ResbmFit a = run_estimator(estimator, sample.subset(split.train), k, mix_seed(seed, 2 * r));
    const ResbmFit b =
        run_estimator(estimator, sample.subset(split.test), k, mix_seed(seed, 2 * r + 1));
    const Alignment al = align_labels(a.z_bar, b.z_bar);
    const TransitionMatrix tb = b.t.relabeled(al.candidate_map());
    out[static_cast<size_t>(r)] = {correct_classification_rate(a.z_bar, b.z_bar),
                                   t_median_abs(tb.matrix(), a.t.matrix())};
  });
  return out;
}

std::vector<LambdaPoint> sweep_lambda(const NetworkSample& sample, int k,
                                      const std::vector<double>& lambdas, int holdout,
                                      int repetitions, const CoOsntfOptions& base,
                                      SingleMethod method, std::uint64_t seed, int workers) {
  if (lambdas.empty()) throw ValidationError("lambda grid is empty");
  if (repetitions < 1) throw ValidationError("repetitions must be positive");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw ValidationError("lambda must be non-negative");
  const int L = static_cast<int>(lambdas.size());
  std::vector<double> errors(static_cast<size_t>(L * repetitions));
  parallel_for(L * repetitions, workers, [&](int job) {
    const int li = job / repetitions;
    const int r = job % repetitions;
    const HoldoutSplit split = random_holdout(sample.size(), holdout, seed, r, 1);
    CoOsntfOptions o = base;
    o.lambda = {lambdas[static_cast<size_t>(li)]};
    o.seed = mix_seed(seed, static_cast<std::uint64_t>(r));
    const ResbmFit fit = fit_co_osntf(sample.subset(split.train), k, o);
    errors[static_cast<size_t>(job)] =
        prediction_error(fit, sample.subset(split.test), k, method, mix_seed(seed, 1000003u + r))
            .median_abs_error;
  });
  std::vector<LambdaPoint> out;
  for (int li = 0; li < L; ++li) {
    LambdaPoint p;
    p.lambda = lambdas[static_cast<size_t>(li)];
    p.errors.assign(errors.begin() + li * repetitions, errors.begin() + (li + 1) * repetitions);
    p.mean_error = std::accumulate(p.errors.begin(), p.errors.end(), 0.0) / repetitions;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace resbm
