#include "resbm/experiment.hpp"

#include "resbm/baselines.hpp"
#include "resbm/error.hpp"
#include "resbm/metrics.hpp"
#include "resbm/parallel.hpp"
#include "resbm/rng.hpp"

namespace resbm {

std::string to_string(Method m) {
  switch (m) {
    case Method::varem: return "varem";
    case Method::co_osntf: return "co-osntf";
    case Method::co_spectral: return "co-spectral";
    case Method::ind_spectral: return "ind-spectral";
    case Method::mean_spectral: return "mean-spectral";
    case Method::spectral_k: return "spectralk";
    case Method::mlsbm: return "mlsbm";
  }
  return "?";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::varem,        Method::co_osntf,
                                           Method::co_spectral,  Method::ind_spectral,
                                           Method::mean_spectral, Method::spectral_k,
                                           Method::mlsbm};
  return methods;
}

Method parse_method(const std::string& s) {
  for (auto m : all_methods())
    if (to_string(m) == s) return m;
  throw ValidationError("unknown method '" + s + "'");
}

const MethodScore& ReplicateResult::score(Method m) const {
  for (const auto& s : scores)
    if (s.method == m) return s;
  throw ValidationError("method " + to_string(m) + " not in results");
}

namespace {

double member_nmi(const std::vector<HardAssignment>& est, const std::vector<HardAssignment>& truth) {
  if (est.size() != truth.size()) throw ValidationError("member counts differ");
  double s = 0.0;
  for (size_t m = 0; m < est.size(); ++m) s += nmi(est[m], truth[m]);
  return s / static_cast<double>(est.size());
}

}  // namespace

MethodScore score_fit(Method method, const ResbmFit& fit, const ResbmFit& truth) {
  MethodScore s;
  s.method = method;
  s.member_nmi = member_nmi(fit.z_members, truth.z_members);
  s.zbar_nmi = nmi(fit.z_bar, truth.z_bar);
  const Alignment al = align_labels(truth.z_bar, fit.z_bar);
  s.t_error = t_error(fit.t.relabeled(al.candidate_map()).matrix(), truth.t.matrix());
  s.warnings = fit.warnings;
  return s;
}

MethodScore run_method(Method method, const Simulation& sim, const EstimatorConfig& estimators,
                       std::uint64_t seed) {
  const int k = sim.truth.k();
  const NetworkSample& sample = sim.sample;
  switch (method) {
    case Method::varem:
    case Method::co_osntf:
    case Method::co_spectral:
    case Method::spectral_k: {
      EstimatorConfig c = estimators;
      c.kind = method == Method::varem      ? Estimator::varem
               : method == Method::co_osntf ? Estimator::co_osntf
               : method == Method::co_spectral ? Estimator::co_spectral
                                               : Estimator::spectral_k;
      return score_fit(method, run_estimator(c, sample, k, seed), sim.truth);
    }
    case Method::ind_spectral: {
      MethodScore s;
      s.method = method;
      s.member_nmi = member_nmi(ind_spectral(sample, k, seed), sim.truth.z_members);
      return s;
    }
    case Method::mean_spectral: {
      MethodScore s;
      s.method = method;
      const HardAssignment z = mean_spectral(sample, k, seed);
      s.member_nmi =
          member_nmi(std::vector<HardAssignment>(static_cast<size_t>(sample.size()), z),
                     sim.truth.z_members);
      s.zbar_nmi = nmi(z, sim.truth.z_bar);
      return s;
    }
    case Method::mlsbm: {
      VarEmOptions o = estimators.varem;
      o.mlsbm = true;
      o.seed = seed;
      const ResbmFit fit = fit_varem(sample, k, o);
      MethodScore s;
      s.method = method;
      s.zbar_nmi = nmi(fit.z_bar, sim.truth.z_bar);
      s.warnings = fit.warnings;
      return s;
    }
  }
  throw ValidationError("unknown method");
}

std::vector<ReplicateResult> compare_methods(const SimConfig& base, const CompareOptions& options) {
  if (options.replicates < 1) throw ValidationError("replicates must be positive");
  if (options.kappas.empty()) throw ValidationError("kappa grid is empty");
  const int K = static_cast<int>(options.kappas.size());
  const int R = options.replicates;
  std::vector<ReplicateResult> out(static_cast<size_t>(K * R));
  parallel_for(K * R, options.workers, [&](int job) {
    const int ki = job / R;
    const int r = job % R;
    SimConfig config = base;
    config.kappa = options.kappas[static_cast<size_t>(ki)];
    Philox rng = make_stream(options.seed, StreamTag::experiment, static_cast<std::uint32_t>(r));
    config.seed = rng.next_u64();
    const std::uint64_t fit_seed = rng.next_u64();
    const Simulation sim = simulate(config);
    ReplicateResult res;
    res.replicate = r;
    res.kappa = config.kappa;
    res.sim_seed = config.seed;
    for (auto m : options.methods) res.scores.push_back(run_method(m, sim, options.estimators, fit_seed));
    out[static_cast<size_t>(job)] = std::move(res);
  });
  return out;
}

std::optional<double> mean_metric(const std::vector<ReplicateResult>& results, double kappa,
                                  Method method, Metric metric) {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : results) {
    if (r.kappa != kappa) continue;
    for (const auto& s : r.scores) {
      if (s.method != method) continue;
      const std::optional<double>& v = metric == Metric::member_nmi ? s.member_nmi
                                       : metric == Metric::zbar_nmi ? s.zbar_nmi
                                                                    : s.t_error;
      if (v) {
        sum += *v;
        ++count;
      }
    }
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

}  // namespace resbm
