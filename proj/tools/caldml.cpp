// Command-line front end: simulate / estimate / diagnose / report.
// Standard output carries machine-parseable JSON lines; prose goes to
// standard error. Exit codes: 0 success, 2 validation error, 1 runtime error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "caldml/caldml.hpp"

namespace {

using caldml::ValidationError;
using json = nlohmann::json;

json parse_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ValidationError(std::string(what) + " file '" + path + "' cannot be opened");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(what) + " file '" + path + "': " + e.what());
  }
}

std::vector<double> read_scores_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scores file '" + path + "' cannot be opened");
  std::vector<double> scores;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row == 1 && line == "score") continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || *end != '\0')
      throw ValidationError("scores file row " + std::to_string(row) + ": cannot parse '" +
                            line + "'");
    scores.push_back(v);
  }
  if (scores.empty()) throw ValidationError("scores file '" + path + "' has no values");
  return scores;
}

int env_threads_or(int fallback) {
  if (const char* env = std::getenv("CALDML_THREADS")) {
    const int t = std::atoi(env);
    if (t >= 1) return t;
  }
  return fallback;
}

struct SimulateArgs {
  std::string config_path, out_dir;
  int reps = -1;
  std::int64_t seed = -1;
  int threads = -1;
};

int cmd_simulate(const SimulateArgs& args) {
  if (!std::filesystem::exists(args.config_path))
    throw ValidationError("config file '" + args.config_path + "' does not exist");
  caldml::SimConfig config = caldml::sim_config_from_json(
      parse_json_file(args.config_path, "config"));
  if (args.reps >= 0) config.reps = args.reps;
  if (args.seed >= 0) config.base_seed = static_cast<std::uint64_t>(args.seed);
  config.threads = args.threads >= 1 ? args.threads : env_threads_or(config.threads);
  config.output_dir = args.out_dir;
  config.validate();

  std::cerr << "running " << config.reps << " repetitions of " << caldml::dgp_label(config.dgp)
            << " (n=" << config.dgp.n << ", p=" << config.dgp.p << ") with "
            << config.estimators.size() << " estimator(s) on " << config.threads
            << " thread(s)\n";
  const caldml::SimResult result = caldml::run_simulation(config);

  json out;
  out["command"] = "simulate";
  out["records_csv"] = config.output_dir + "/results.csv";
  out["summary_json"] = config.output_dir + "/summary.json";
  out["config_json"] = config.output_dir + "/config_resolved.json";
  out["reps"] = config.reps;
  out["estimators"] = config.estimators.size();
  std::size_t failures = 0;
  for (const auto& s : result.summaries) failures += s.failures;
  out["failed_records"] = failures;
  std::cout << out.dump() << "\n";
  return 0;
}

struct EstimateArgs {
  std::string data_path, model, algorithm;
  std::string calibration = "none", learner_m = "logit", learner_g = "linear";
  double clip = 1e-12;
  int folds = 5;
  std::int64_t seed = 0;
};

int cmd_estimate(const EstimateArgs& args) {
  caldml::EstimatorConfig config;
  config.model = caldml::model_from_string(args.model);
  config.algorithm = caldml::algorithm_from_string(args.algorithm);
  config.calibration = caldml::calibration_from_string(args.calibration);
  config.learner_m = caldml::LearnerSpec::of(caldml::learner_kind_from_string(args.learner_m));
  config.learner_g = caldml::LearnerSpec::of(caldml::learner_kind_from_string(args.learner_g));
  config.clip = args.clip;
  config.folds = args.folds;
  config.validate();

  const caldml::EstimateResult res = caldml::estimate_from_file(
      args.data_path, config, static_cast<std::uint64_t>(args.seed));
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  json out;
  out["command"] = "estimate";
  out["label"] = caldml::estimator_label(config);
  out["theta_hat"] = res.theta_hat;
  out["se"] = res.se;
  out["ci_low"] = res.ci_low;
  out["ci_high"] = res.ci_high;
  out["n"] = res.m_used.size();
  out["warnings"] = res.warnings.size();
  std::cout << out.dump() << "\n";
  return 0;
}

struct DiagnoseArgs {
  std::string data_path, scores_path, learner_m, out_dir = ".";
  int bins = 10;
  int folds = 5;
  double clip = 1e-12;
  std::int64_t seed = 0;
};

int cmd_diagnose(const DiagnoseArgs& args) {
  if (args.scores_path.empty() == args.learner_m.empty())
    throw ValidationError("diagnose: pass exactly one of --scores or --learner-m");
  const caldml::Dataset ds = caldml::read_dataset_csv(args.data_path);

  std::vector<double> scores;
  std::vector<std::string> warnings;
  if (!args.scores_path.empty()) {
    scores = read_scores_file(args.scores_path);
    if (scores.size() != ds.n())
      throw ValidationError("scores length " + std::to_string(scores.size()) +
                            " does not match data rows " + std::to_string(ds.n()));
  } else {
    const caldml::LearnerSpec spec =
        caldml::LearnerSpec::of(caldml::learner_kind_from_string(args.learner_m));
    const caldml::FoldPartition folds = caldml::make_folds(
        ds.n(), args.folds, caldml::mix64(static_cast<std::uint64_t>(args.seed),
                                          caldml::kSeedFolds));
    scores = caldml::cross_fit_propensity(ds, folds, spec,
                                          static_cast<std::uint64_t>(args.seed),
                                          caldml::kSeedLearnerM, &warnings);
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

  const double ece_uniform = caldml::ece(scores, ds.d, args.bins, caldml::Binning::uniform);
  const double ece_quantile = caldml::ece(scores, ds.d, args.bins, caldml::Binning::quantile);
  const caldml::BinTable table = caldml::overlap_ratio_bins(scores, ds.d, args.bins);

  std::filesystem::create_directories(args.out_dir);
  const std::string bins_path = args.out_dir + "/bins.csv";
  {
    std::ofstream out(bins_path);
    out << "bin,lower,upper,count,treated_count,mean_prediction,treated_fraction\n";
    for (std::size_t b = 0; b < table.rows.size(); ++b) {
      const auto& row = table.rows[b];
      out << b << "," << caldml::fmt17(row.lower) << "," << caldml::fmt17(row.upper) << ","
          << row.count << "," << row.treated_count << ","
          << caldml::fmt17(row.mean_prediction) << "," << caldml::fmt17(row.treated_fraction)
          << "\n";
    }
  }
  // SMD under the inverse-propensity weights implied by the scores.
  const std::vector<double> clipped = caldml::clip_probs(scores, args.clip);
  std::vector<double> weights(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i)
    weights[i] = ds.d[i] == 1.0 ? 1.0 / clipped[i] : 1.0 / (1.0 - clipped[i]);
  const std::vector<double> smd = caldml::smd(ds.x, ds.d, weights);
  const std::string smd_path = args.out_dir + "/smd.csv";
  {
    std::ofstream out(smd_path);
    out << "covariate,smd\n";
    for (std::size_t k = 0; k < smd.size(); ++k)
      out << "x" << k + 1 << "," << caldml::fmt17(smd[k]) << "\n";
  }

  json out;
  out["command"] = "diagnose";
  out["n"] = ds.n();
  out["bins"] = args.bins;
  out["ece_uniform"] = ece_uniform;
  out["ece_quantile"] = ece_quantile;
  out["bins_csv"] = bins_path;
  out["smd_csv"] = smd_path;
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_report(const std::string& in_dir) {
  const std::string results_path = in_dir + "/results.csv";
  if (!std::filesystem::exists(results_path))
    throw ValidationError("no results found: '" + results_path + "' does not exist");
  const auto records = caldml::read_records_csv(results_path);
  if (records.empty()) throw ValidationError("'" + results_path + "' contains no records");
  const auto summaries = caldml::summarize_records(records);

  std::fprintf(stderr, "%-64s %8s %8s %8s %8s %8s %6s %5s\n", "estimator", "MAE", "RMSE",
               "Std.dev", "Coverage", "CI len", "reps", "fail");
  for (const auto& s : summaries) {
    std::fprintf(stderr, "%-64s %8.4f %8.4f %8.4f %8.3f %8.4f %6zu %5zu\n", s.label.c_str(),
                 s.stats.mae, s.stats.rmse, s.stats.std_dev, s.stats.coverage,
                 s.stats.mean_ci_length, s.stats.reps, s.failures);
    json out;
    out["label"] = s.label;
    out["mae"] = s.stats.mae;
    out["rmse"] = s.stats.rmse;
    out["std_dev"] = s.stats.std_dev;
    out["coverage"] = s.stats.coverage;
    out["mean_ci_length"] = s.stats.mean_ci_length;
    out["reps"] = s.stats.reps;
    out["failures"] = s.failures;
    std::cout << out.dump() << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrated propensity-score estimation of average treatment effects"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a Monte Carlo simulation grid");
  sim_cmd->add_option("--config", sim.config_path, "JSON simulation config")->required();
  sim_cmd->add_option("--out", sim.out_dir, "output directory")->required();
  sim_cmd->add_option("--reps", sim.reps, "override repetition count");
  sim_cmd->add_option("--seed", sim.seed, "override base seed");
  sim_cmd->add_option("--threads", sim.threads,
                      "worker threads (default: CALDML_THREADS or config)");

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate the ATE from a dataset CSV");
  est_cmd->add_option("--data", est.data_path, "dataset CSV (y,d,x1,...,xp)")->required();
  est_cmd->add_option("--model", est.model, "irm | plr | ipw")->required();
  est_cmd->add_option("--algorithm", est.algorithm, "alg1..alg5")->required();
  est_cmd->add_option("--calibration", est.calibration, "none | isotonic | platt | venn_abers");
  est_cmd->add_option("--learner-m", est.learner_m, "propensity learner");
  est_cmd->add_option("--learner-g", est.learner_g, "outcome learner");
  est_cmd->add_option("--clip", est.clip, "propensity clipping threshold");
  est_cmd->add_option("--folds", est.folds, "cross-fitting folds");
  est_cmd->add_option("--seed", est.seed, "estimation seed");

  DiagnoseArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Calibration and balance diagnostics");
  diag_cmd->add_option("--data", diag.data_path, "dataset CSV")->required();
  diag_cmd->add_option("--scores", diag.scores_path, "propensity scores, one per line");
  diag_cmd->add_option("--learner-m", diag.learner_m,
                       "cross-fit this learner instead of reading scores");
  diag_cmd->add_option("--bins", diag.bins, "number of bins");
  diag_cmd->add_option("--folds", diag.folds, "cross-fitting folds for --learner-m");
  diag_cmd->add_option("--clip", diag.clip, "clip threshold for SMD weights");
  diag_cmd->add_option("--seed", diag.seed, "seed for --learner-m cross-fitting");
  diag_cmd->add_option("--out", diag.out_dir, "output directory for CSV tables");

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "Recompute summaries from per-rep CSV");
  report_cmd->add_option("--in", report_dir, "directory holding results.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim_cmd->parsed()) return cmd_simulate(sim);
    if (est_cmd->parsed()) return cmd_estimate(est);
    if (diag_cmd->parsed()) return cmd_diagnose(diag);
    if (report_cmd->parsed()) return cmd_report(report_dir);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
