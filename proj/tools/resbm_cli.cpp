#include "resbm/error.hpp"
#include "resbm/experiment.hpp"
#include "resbm/inference.hpp"
#include "resbm/io.hpp"
#include "resbm/metrics.hpp"
#include "resbm/parallel.hpp"
#include "resbm/predict.hpp"
#include "resbm/rng.hpp"
#include "resbm/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace resbm;

namespace {

json num(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

json vec_json(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

std::string matrix_csv(const Matrix& m) {
  std::string s;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) s += ',';
      s += format_double(m(i, j));
    }
    s += '\n';
  }
  return s;
}

std::string opt_csv(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

struct EstimatorFlags {
  std::string method = "co-osntf";
  std::optional<int> restarts;
  std::optional<int> max_iter;
  std::optional<double> tol;
  std::vector<double> lambda;
  std::optional<double> gamma;

  void add(CLI::App* cmd, const std::string& default_method = "co-osntf") {
    method = default_method;
    cmd->add_option("--method", method, "Estimator: varem, co-osntf, co-spectral, spectralk")
        ->capture_default_str();
    cmd->add_option("--restarts", restarts, "Random restarts (varem, co-osntf)");
    cmd->add_option("--max-iter", max_iter, "Iteration cap");
    cmd->add_option("--tol", tol, "Relative convergence tolerance");
    cmd->add_option("--lambda", lambda, "Co-OSNTF penalty, one value or one per member");
    cmd->add_option("--gamma", gamma, "Co-Spectral penalty");
  }

  EstimatorConfig config() const {
    EstimatorConfig c;
    c.kind = parse_estimator(method);
    if (restarts) c.varem.restarts = c.co_osntf.restarts = *restarts;
    if (max_iter) c.varem.max_iter = c.co_osntf.max_iter = c.co_spectral.max_iter = *max_iter;
    if (tol) c.varem.tol = c.co_osntf.tol = c.co_spectral.tol = *tol;
    if (!lambda.empty()) c.co_osntf.lambda = lambda;
    if (gamma) c.co_spectral.gamma = *gamma;
    return c;
  }
};

void write_fit_tables(const ResbmFit& fit, const fs::path& out) {
  write_fit(fit, out / "fit.json");
  write_text(out / "t.csv", matrix_csv(fit.t.matrix()));
  std::string labels = "node,z_bar";
  for (int m = 0; m < fit.members(); ++m) labels += ",member_" + std::to_string(m);
  labels += '\n';
  for (int i = 0; i < fit.n(); ++i) {
    labels += std::to_string(i) + "," + std::to_string(fit.z_bar[i]);
    for (const auto& z : fit.z_members) labels += "," + std::to_string(z[i]);
    labels += '\n';
  }
  write_text(out / "labels.csv", labels);
  std::string trace = "iteration,objective\n";
  for (size_t i = 0; i < fit.objective_trace.size(); ++i)
    trace += std::to_string(i) + "," + format_double(fit.objective_trace[i]) + "\n";
  write_text(out / "objective_trace.csv", trace);
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::io: return 2;
    case ErrorCategory::validation: return 3;
    case ErrorCategory::estimation: return 4;
    case ErrorCategory::inference: return 5;
  }
  return 6;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random effects stochastic block model toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  int workers = default_workers();
  fs::path out = "out";

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--out", out, "Output directory")->capture_default_str();
    cmd->add_option("--workers", workers, "Worker threads (default: RESBM_WORKERS or all cores)");
  };

  // simulate
  SimConfig sim;
  std::optional<double> degree_target;
  auto* c_sim = app.add_subcommand("simulate", "Draw a sample from the model");
  common(c_sim);
  c_sim->add_option("--n", sim.n, "Nodes")->capture_default_str();
  c_sim->add_option("--k", sim.k, "Communities")->capture_default_str();
  c_sim->add_option("--members", sim.members, "Member networks")->capture_default_str();
  c_sim->add_option("--kappa", sim.kappa, "Variation factor")->capture_default_str();
  c_sim->add_option("--a", sim.a, "Lower diagonal block probability")->capture_default_str();
  c_sim->add_option("--b", sim.b, "Upper diagonal block probability")->capture_default_str();
  c_sim->add_option("--rho", sim.rho, "Diagonal to off-diagonal ratio")->capture_default_str();
  c_sim->add_option("--degree-target", degree_target, "Expected average degree");

  // fit
  fs::path sample_path;
  int k = 3;
  EstimatorFlags est;
  auto* c_fit = app.add_subcommand("fit", "Estimate mean assignments and T from a sample");
  common(c_fit);
  c_fit->add_option("--sample", sample_path, "Sample manifest")->required();
  c_fit->add_option("--k", k, "Communities")->capture_default_str();
  est.add(c_fit);

  // test
  fs::path group_a, group_b;
  std::string statistic = "muv";
  int resamples = 1000;
  double level = 0.05;
  std::string correction = "bh-fdr";
  auto* c_test = app.add_subcommand("test", "Permutation test between two groups");
  common(c_test);
  c_test->add_option("--group-a", group_a, "Manifest of group A")->required();
  c_test->add_option("--group-b", group_b, "Manifest of group B")->required();
  c_test->add_option("--k", k, "Communities")->capture_default_str();
  c_test->add_option("--statistic", statistic, "muv, sine or muv-node")->capture_default_str();
  c_test->add_option("--resamples", resamples, "Permutation resamples")->capture_default_str();
  c_test->add_option("--level", level, "Significance level for node corrections")
      ->capture_default_str();
  c_test->add_option("--correction", correction, "bh-fdr or holm-fwer")->capture_default_str();
  est.add(c_test);

  // predict
  fs::path fit_path;
  std::string single = "osntf";
  auto* c_pred = app.add_subcommand("predict", "Out-of-sample prediction error of a fit");
  common(c_pred);
  c_pred->add_option("--fit", fit_path, "Fit file")->required();
  c_pred->add_option("--sample", sample_path, "Test sample manifest")->required();
  c_pred->add_option("--k", k, "Communities")->capture_default_str();
  c_pred->add_option("--method", single, "Single-network method: spectral or osntf")
      ->capture_default_str();

  // classify
  fs::path fit_a, fit_b;
  std::string rule = "loglik";
  auto* c_cls = app.add_subcommand("classify", "Assign new subjects to group A or B");
  common(c_cls);
  c_cls->add_option("--fit-a", fit_a, "Fit of group A")->required();
  c_cls->add_option("--fit-b", fit_b, "Fit of group B")->required();
  c_cls->add_option("--sample", sample_path, "Manifest of subjects to classify")->required();
  c_cls->add_option("--k", k, "Communities")->capture_default_str();
  c_cls->add_option("--method", single, "Single-network method: spectral or osntf")
      ->capture_default_str();
  c_cls->add_option("--rule", rule, "loglik or muv")->capture_default_str();

  // validate
  int repetitions = 10;
  auto* c_val = app.add_subcommand("validate", "Split-sample agreement of estimates");
  common(c_val);
  c_val->add_option("--sample", sample_path, "Sample manifest")->required();
  c_val->add_option("--k", k, "Communities")->capture_default_str();
  c_val->add_option("--repetitions", repetitions, "Random splits")->capture_default_str();
  est.add(c_val);

  // sweep-lambda
  std::vector<double> lambdas{0.001, 0.00316227766016838, 0.01, 0.0316227766016838, 0.1};
  int holdout = 0;
  int osntf_restarts = 5;
  auto* c_sweep = app.add_subcommand("sweep-lambda", "Cross-validated prediction error over lambda");
  common(c_sweep);
  c_sweep->add_option("--sample", sample_path, "Sample manifest")->required();
  c_sweep->add_option("--k", k, "Communities")->capture_default_str();
  c_sweep->add_option("--lambdas", lambdas, "Lambda grid");
  c_sweep->add_option("--holdout", holdout, "Held-out members per split (default: M/4)");
  c_sweep->add_option("--repetitions", repetitions, "Random splits")->capture_default_str();
  c_sweep->add_option("--restarts", osntf_restarts, "Co-OSNTF restarts")->capture_default_str();
  c_sweep->add_option("--method", single, "Single-network method: spectral or osntf")
      ->capture_default_str();

  // compare
  std::vector<double> kappas{0.0, 0.05, 0.1, 0.2, 0.3};
  int replicates = 10;
  std::vector<std::string> method_names;
  auto* c_cmp = app.add_subcommand("compare", "Compare estimators on simulated samples across kappa");
  common(c_cmp);
  c_cmp->add_option("--n", sim.n, "Nodes")->capture_default_str();
  c_cmp->add_option("--k", sim.k, "Communities")->capture_default_str();
  c_cmp->add_option("--members", sim.members, "Member networks")->capture_default_str();
  c_cmp->add_option("--a", sim.a, "Lower diagonal block probability")->capture_default_str();
  c_cmp->add_option("--b", sim.b, "Upper diagonal block probability")->capture_default_str();
  c_cmp->add_option("--rho", sim.rho, "Diagonal to off-diagonal ratio")->capture_default_str();
  c_cmp->add_option("--degree-target", degree_target, "Expected average degree");
  c_cmp->add_option("--kappas", kappas, "Variation factors");
  c_cmp->add_option("--replicates", replicates, "Replicates per kappa")->capture_default_str();
  c_cmp->add_option("--methods", method_names, "Methods (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (workers < 1) throw ValidationError("--workers must be positive");
    if (*c_sim) {
      sim.seed = seed;
      sim.degree_target = degree_target;
      const Simulation s = simulate(sim);
      const fs::path manifest = write_sample(s.sample, out, sim.k);
      write_fit_tables(s.truth, out / "truth");
      std::cout << "wrote " << s.sample.size() << " networks to " << manifest.string() << "\n";
    } else if (*c_fit) {
      const NetworkSample sample = read_sample(sample_path);
      const ResbmFit fit = run_estimator(est.config(), sample, k, seed);
      write_fit_tables(fit, out);
      for (const auto& w : fit.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "method " << est.method << ": converged=" << (fit.converged ? "yes" : "no")
                << " iterations=" << fit.iterations << "\n";
    } else if (*c_test) {
      const NetworkSample a = read_sample(group_a);
      const NetworkSample b = read_sample(group_b);
      const Statistic stat = parse_statistic(statistic);
      PermutationOptions po{resamples, seed, workers};
      TestResult res = permutation_test(a, b, k, est.config(), stat, po);
      const bool node = stat == Statistic::muv_node;
      if (node) {
        const Correction corr = parse_correction(correction);
        res.corrected[to_string(corr)] = adjust_pvalues(res.p_value, corr, level);
      }
      json j;
      j["statistic"] = to_string(stat);
      j["estimator"] = to_string(res.estimator);
      j["seed"] = res.seed;
      j["n_resamples"] = res.n_resamples;
      j["n_used"] = res.n_used();
      j["n_skipped"] = res.n_skipped;
      j["observed"] = vec_json(res.observed);
      j["p_value"] = vec_json(res.p_value);
      for (const auto& [name, adj] : res.corrected) {
        j["corrected"][name]["level"] = level;
        j["corrected"][name]["adjusted"] = vec_json(adj.adjusted);
        j["corrected"][name]["rejected"] = adj.rejected;
      }
      write_json(out / "test.json", j);
      std::string null_csv = "resample";
      for (int i = 0; i < res.observed.size(); ++i)
        null_csv += node ? ",node_" + std::to_string(i) : std::string(",statistic");
      null_csv += '\n';
      for (size_t r = 0; r < res.null_samples.size(); ++r) {
        null_csv += std::to_string(r);
        for (int i = 0; i < res.null_samples[r].size(); ++i)
          null_csv += "," + format_double(res.null_samples[r](i));
        null_csv += '\n';
      }
      write_text(out / "null.csv", null_csv);
      if (node) {
        const Adjusted& adj = res.corrected.begin()->second;
        std::string t = "node,statistic,p_value,adjusted,rejected\n";
        int rejected = 0;
        for (int i = 0; i < res.observed.size(); ++i) {
          t += std::to_string(i) + "," + format_double(res.observed(i)) + "," +
               format_double(res.p_value(i)) + "," + format_double(adj.adjusted(i)) + "," +
               (adj.rejected[static_cast<size_t>(i)] ? "1" : "0") + "\n";
          rejected += adj.rejected[static_cast<size_t>(i)];
        }
        write_text(out / "node_pvalues.csv", t);
        std::cout << "rejected " << rejected << " of " << res.observed.size() << " nodes at "
                  << correction << " " << level << "\n";
      } else {
        std::cout << statistic << " statistic " << format_double(res.observed(0)) << " p-value "
                  << format_double(res.p_value(0)) << " (" << res.n_used() << " resamples, "
                  << res.n_skipped << " skipped)\n";
      }
    } else if (*c_pred) {
      const ResbmFit fit = read_fit(fit_path);
      const NetworkSample sample = read_sample(sample_path);
      const PredictionReport rep =
          prediction_error(fit, sample, k, parse_single_method(single), seed, workers);
      json j;
      j["median_abs_error"] = num(rep.median_abs_error);
      j["mean_classification_rate"] = num(rep.mean_classification_rate);
      j["used"] = rep.used;
      j["dropped"] = rep.dropped;
      j["subject_rates"] = rep.subject_rates;
      write_json(out / "predict.json", j);
      write_text(out / "u_bar.csv", matrix_csv(rep.u_bar));
      write_text(out / "expected_assignment.csv",
                 matrix_csv(expected_assignment(fit).mean.matrix()));
      std::cout << "median absolute error " << format_double(rep.median_abs_error) << " ("
                << rep.used << " subjects, " << rep.dropped << " dropped)\n";
    } else if (*c_cls) {
      const ResbmFit fa = read_fit(fit_a);
      const ResbmFit fb = read_fit(fit_b);
      const NetworkSample sample = read_sample(sample_path);
      const Rule r = parse_rule(rule);
      const SingleMethod sm = parse_single_method(single);
      std::vector<Classification> cls(static_cast<size_t>(sample.size()));
      parallel_for(sample.size(), workers, [&](int s) {
        Philox rng = make_stream(seed, StreamTag::subject, static_cast<std::uint32_t>(s));
        const HardAssignment u = estimate_subject(sample[s], k, sm, rng.next_u64());
        cls[static_cast<size_t>(s)] = classify_subject(u, fa, fb, r);
      });
      std::string t = "subject,id,group,tie,score_a,score_b\n";
      for (int s = 0; s < sample.size(); ++s) {
        const auto& c = cls[static_cast<size_t>(s)];
        const std::string id =
            sample.member_ids().empty() ? "" : sample.member_ids()[static_cast<size_t>(s)];
        t += std::to_string(s) + "," + id + "," + (c.group == Group::a ? "A" : "B") + "," +
             (c.tie ? "1" : "0") + "," + format_double(c.score_a) + "," +
             format_double(c.score_b) + "\n";
      }
      write_text(out / "classify.csv", t);
      std::cout << "classified " << sample.size() << " subjects\n";
    } else if (*c_val) {
      const NetworkSample sample = read_sample(sample_path);
      const auto res = split_validation(sample, k, est.config(), repetitions, seed, workers);
      std::string t = "split,classification_rate,t_median_abs\n";
      for (size_t r = 0; r < res.size(); ++r)
        t += std::to_string(r) + "," + format_double(res[r].classification_rate) + "," +
             format_double(res[r].t_median_abs) + "\n";
      write_text(out / "validate.csv", t);
      std::cout << "wrote " << res.size() << " split comparisons\n";
    } else if (*c_sweep) {
      const NetworkSample sample = read_sample(sample_path);
      if (holdout == 0) holdout = std::max(1, sample.size() / 4);
      CoOsntfOptions base;
      base.restarts = osntf_restarts;
      const auto pts = sweep_lambda(sample, k, lambdas, holdout, repetitions, base,
                                    parse_single_method(single), seed, workers);
      std::string t = "lambda,log10_lambda,mean_error\n";
      std::string all = "lambda,split,error\n";
      for (const auto& p : pts) {
        t += format_double(p.lambda) + "," + format_double(std::log10(p.lambda)) + "," +
             format_double(p.mean_error) + "\n";
        for (size_t r = 0; r < p.errors.size(); ++r)
          all += format_double(p.lambda) + "," + std::to_string(r) + "," +
                 format_double(p.errors[r]) + "\n";
      }
      write_text(out / "sweep_lambda.csv", t);
      write_text(out / "sweep_lambda_splits.csv", all);
      std::cout << "evaluated " << pts.size() << " lambda values\n";
    } else if (*c_cmp) {
      sim.degree_target = degree_target;
      CompareOptions co;
      co.kappas = kappas;
      co.replicates = replicates;
      co.seed = seed;
      co.workers = workers;
      if (!method_names.empty()) {
        co.methods.clear();
        for (const auto& m : method_names) co.methods.push_back(parse_method(m));
      }
      const auto res = compare_methods(sim, co);
      std::string t = "kappa,replicate,method,member_nmi,zbar_nmi,t_error\n";
      for (const auto& r : res)
        for (const auto& s : r.scores)
          t += format_double(r.kappa) + "," + std::to_string(r.replicate) + "," +
               to_string(s.method) + "," + opt_csv(s.member_nmi) + "," + opt_csv(s.zbar_nmi) +
               "," + opt_csv(s.t_error) + "\n";
      write_text(out / "compare_replicates.csv", t);
      std::string summary = "kappa,method,member_nmi,zbar_nmi,t_error\n";
      for (double kappa : kappas)
        for (auto m : co.methods)
          summary += format_double(kappa) + "," + to_string(m) + "," +
                     opt_csv(mean_metric(res, kappa, m, Metric::member_nmi)) + "," +
                     opt_csv(mean_metric(res, kappa, m, Metric::zbar_nmi)) + "," +
                     opt_csv(mean_metric(res, kappa, m, Metric::t_error)) + "\n";
      write_text(out / "compare_summary.csv", summary);
      std::cout << summary;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << "\n";
    return 6;
  }
  return 0;
}
