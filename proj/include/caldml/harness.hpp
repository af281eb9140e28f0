#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "caldml/dgp.hpp"
#include "caldml/errors.hpp"
#include "caldml/estimators.hpp"
#include "caldml/metrics.hpp"

namespace caldml {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

/// 17 significant digits: lossless double round-trip.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_compact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Compact parameter string, e.g. "dgp1{r2_d=0.5;r2_y=0.5;theta0=0.5}".
inline std::string dgp_label(const DgpSpec& spec) {
  std::string out = to_string(spec.name);
  if (!spec.params.empty()) {
    out += "{";
    bool first = true;
    for (const auto& [k, v] : spec.params) {
      if (!first) out += ";";
      out += k + "=" + fmt_compact(v);
      first = false;
    }
    out += "}";
  }
  return out;
}

inline std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

/// Estimator label following the simulation-table naming, e.g.
/// "IRM Alg-5-full-sample-Iso (m=gbt, g=gbt, clip=1e-12)".
inline std::string estimator_label(const EstimatorConfig& c) {
  std::string method;
  switch (c.algorithm) {
    case Algorithm::alg1:
      method = c.clip >= 0.01 ? "Alg-1-Clipped" : "Alg-1-Uncalib";
      break;
    case Algorithm::alg2: method = "Alg-2-nested-cf"; break;
    case Algorithm::alg3: method = "Alg-3-cf"; break;
    case Algorithm::alg4: method = "Alg-4-single-split"; break;
    case Algorithm::alg5: method = "Alg-5-full-sample"; break;
    case Algorithm::oracle: method = "Oracle"; break;
  }
  switch (c.calibration) {
    case CalibrationMethod::isotonic: method += "-Iso"; break;
    case CalibrationMethod::platt: method += "-Platt"; break;
    case CalibrationMethod::venn_abers: method += "-VA"; break;
    case CalibrationMethod::none: break;
  }
  std::string label = upper(to_string(c.model)) + " " + method + " (m=" +
                      to_string(c.learner_m.kind);
  if (c.model != Model::ipw) label += std::string(", g=") + to_string(c.learner_g.kind);
  label += ", clip=" + fmt_compact(c.clip) + ")";
  return label;
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct RepRecord {
  int rep = 0;
  std::string dgp;
  std::size_t n = 0, p = 0;
  std::string model, algorithm, calibration, learner_m, learner_g;
  double clip = 0.0;
  double theta_true = 0.0;
  double theta_hat = 0.0, se = 0.0, ci_low = 0.0, ci_high = 0.0;
  int covered = 0;
  double abs_error = 0.0;
  double ece_uniform = 0.0, ece_quantile = 0.0;
  double norm_treated = 0.0, norm_control = 0.0;
  int warnings = 0;
  double runtime_ms = 0.0;
  std::string error; // not serialized; empty when the run succeeded
};

inline constexpr const char* kRepCsvHeader =
    "rep,dgp,n,p,model,algorithm,calibration,learner_m,learner_g,clip,theta_true,theta_hat,"
    "se,ci_low,ci_high,covered,abs_error,ece_uniform,ece_quantile,norm_treated,norm_control,"
    "warnings,runtime_ms";

inline std::string rep_record_csv_line(const RepRecord& r) {
  std::string line;
  line += std::to_string(r.rep);
  line += "," + r.dgp;
  line += "," + std::to_string(r.n);
  line += "," + std::to_string(r.p);
  line += "," + r.model + "," + r.algorithm + "," + r.calibration;
  line += "," + r.learner_m + "," + r.learner_g;
  line += "," + fmt17(r.clip);
  line += "," + fmt17(r.theta_true) + "," + fmt17(r.theta_hat) + "," + fmt17(r.se);
  line += "," + fmt17(r.ci_low) + "," + fmt17(r.ci_high);
  line += "," + std::to_string(r.covered);
  line += "," + fmt17(r.abs_error) + "," + fmt17(r.ece_uniform) + "," + fmt17(r.ece_quantile);
  line += "," + fmt17(r.norm_treated) + "," + fmt17(r.norm_control);
  line += "," + std::to_string(r.warnings);
  line += "," + fmt17(r.runtime_ms);
  return line;
}

// ---------------------------------------------------------------------------
// Dataset CSV (header y,d,x1,...,xp)
// ---------------------------------------------------------------------------

inline void write_dataset_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << "y,d";
  for (std::size_t j = 0; j < ds.p(); ++j) out << ",x" << j + 1;
  out << "\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out << fmt17(ds.y[i]) << "," << (ds.d[i] == 1.0 ? "1" : "0");
    for (std::size_t j = 0; j < ds.p(); ++j) out << "," << fmt17(ds.x(i, j));
    out << "\n";
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& tok, const std::string& what, std::size_t row) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw ValidationError("row " + std::to_string(row) + ": cannot parse " + what + " '" +
                          tok + "'");
  return v;
}

} // namespace detail

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open data file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("'" + path + "': empty file");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3)
    throw ValidationError("'" + path + "': header needs y,d,x1,... columns");
  const char* expected[] = {"y", "d"};
  for (int j = 0; j < 2; ++j)
    if (header[j] != expected[j])
      throw ValidationError("'" + path + "': missing column '" + expected[j] + "' (found '" +
                            header[j] + "')");
  for (std::size_t j = 2; j < header.size(); ++j) {
    const std::string want = "x" + std::to_string(j - 1);
    if (header[j] != want)
      throw ValidationError("'" + path + "': missing column '" + want + "' (found '" +
                            header[j] + "')");
  }
  const std::size_t p = header.size() - 2;

  Dataset ds;
  std::vector<double> xdata;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto toks = detail::split_csv_line(line);
    if (toks.size() != p + 2)
      throw ValidationError("row " + std::to_string(row) + ": expected " +
                            std::to_string(p + 2) + " fields, got " +
                            std::to_string(toks.size()));
    const double y = detail::parse_double(toks[0], "y", row);
    const double d = detail::parse_double(toks[1], "d", row);
    if (!std::isfinite(y))
      throw ValidationError("row " + std::to_string(row) + ": non-finite outcome");
    if (d != 0.0 && d != 1.0)
      throw ValidationError("row " + std::to_string(row) + ": d must be 0 or 1");
    ds.y.push_back(y);
    ds.d.push_back(d);
    for (std::size_t j = 0; j < p; ++j) {
      const double v = detail::parse_double(toks[2 + j], header[2 + j], row);
      if (!std::isfinite(v))
        throw ValidationError("row " + std::to_string(row) + ": non-finite covariate " +
                              header[2 + j]);
      xdata.push_back(v);
    }
  }
  if (ds.y.empty()) throw ValidationError("'" + path + "': no data rows");
  ds.x = Matrix(ds.y.size(), p);
  ds.x.data() = std::move(xdata);
  return ds;
}

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

struct SimConfig {
  DgpSpec dgp;
  std::vector<EstimatorConfig> estimators;
  int reps = 100;
  std::uint64_t base_seed = 0;
  int threads = 1;
  std::string output_dir;
  bool save_datasets = false;

  void validate() const {
    dgp.validate();
    if (estimators.empty()) throw ValidationError("SimConfig: estimator list is empty");
    for (const auto& e : estimators) e.validate();
    if (reps < 1) throw ValidationError("SimConfig: reps must be >= 1");
    if (threads < 1) throw ValidationError("SimConfig: threads must be >= 1");
    std::set<std::string> labels;
    for (const auto& e : estimators)
      if (!labels.insert(estimator_label(e)).second)
        throw ValidationError("SimConfig: duplicate estimator label '" + estimator_label(e) +
                              "'; vary model/algorithm/calibration/learners/clip");
  }
};

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ValidationError(where + ": unknown key '" + it.key() + "'");
}

inline LearnerSpec learner_from_json(const json& j, const std::string& where) {
  LearnerSpec spec;
  if (j.is_string()) {
    spec.kind = learner_kind_from_string(j.get<std::string>());
    return spec;
  }
  if (!j.is_object()) throw ValidationError(where + ": learner must be a string or object");
  if (!j.contains("kind")) throw ValidationError(where + ": learner object needs 'kind'");
  spec.kind = learner_kind_from_string(j.at("kind").get<std::string>());
  static const std::set<std::string> gbt_keys = {"kind", "rounds", "learning_rate",
                                                 "max_depth", "min_leaf"};
  static const std::set<std::string> rf_keys = {"kind", "trees", "min_leaf",
                                                "feature_fraction", "bootstrap"};
  static const std::set<std::string> logit_keys = {"kind", "l2", "max_iter", "tol"};
  static const std::set<std::string> linear_keys = {"kind"};
  const std::set<std::string>* allowed = &linear_keys;
  if (spec.kind == LearnerKind::gbt) allowed = &gbt_keys;
  if (spec.kind == LearnerKind::rf) allowed = &rf_keys;
  if (spec.kind == LearnerKind::logit) allowed = &logit_keys;
  reject_unknown_keys(j, *allowed, where);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "kind") continue;
    if (!it.value().is_number())
      throw ValidationError(where + ": hyperparameter '" + it.key() + "' must be numeric");
    spec.hyper[it.key()] = it.value().get<double>();
    if (spec.hyper[it.key()] <= 0.0 && it.key() != "bootstrap")
      throw ValidationError(where + ": hyperparameter '" + it.key() + "' must be positive");
  }
  return spec;
}

inline json learner_to_json(const LearnerSpec& spec) {
  if (spec.hyper.empty()) return json(to_string(spec.kind));
  json j;
  j["kind"] = to_string(spec.kind);
  for (const auto& [k, v] : spec.hyper) j[k] = v;
  return j;
}

} // namespace detail

inline DgpSpec dgp_spec_from_json(const json& j) {
  detail::reject_unknown_keys(j, {"name", "n", "p", "params"}, "dgp");
  if (!j.contains("name") || !j.contains("n"))
    throw ValidationError("dgp: 'name' and 'n' are required");
  DgpSpec spec;
  spec.name = dgp_from_string(j.at("name").get<std::string>());
  spec.n = j.at("n").get<std::size_t>();
  switch (spec.name) {
    case DgpName::dgp1: spec.p = 20; break;
    case DgpName::dgp2: spec.p = 3; break;
    case DgpName::dgp3: spec.p = 4; break;
    case DgpName::dgp4: spec.p = 20; break;
  }
  if (j.contains("p")) spec.p = j.at("p").get<std::size_t>();
  if (j.contains("params")) {
    const json& pj = j.at("params");
    static const std::set<std::string> dgp1_keys = {"r2_d", "r2_y", "theta0"};
    static const std::set<std::string> dgp2_keys = {"overlap", "theta0"};
    static const std::set<std::string> dgp3_keys = {"setting"};
    static const std::set<std::string> dgp4_keys = {"alpha"};
    const std::set<std::string>* allowed = &dgp1_keys;
    if (spec.name == DgpName::dgp2) allowed = &dgp2_keys;
    if (spec.name == DgpName::dgp3) allowed = &dgp3_keys;
    if (spec.name == DgpName::dgp4) allowed = &dgp4_keys;
    detail::reject_unknown_keys(pj, *allowed, "dgp.params");
    for (auto it = pj.begin(); it != pj.end(); ++it) {
      if (it.key() == "setting") {
        if (!it.value().is_string() || it.value().get<std::string>() != "A")
          throw ValidationError("dgp.params: only setting \"A\" is supported");
        continue;
      }
      spec.params[it.key()] = it.value().get<double>();
    }
  }
  spec.validate();
  return spec;
}

inline EstimatorConfig estimator_config_from_json(const json& j) {
  detail::reject_unknown_keys(j,
                              {"model", "algorithm", "calibration", "learner_m", "learner_g",
                               "clip", "folds", "alg2_calib_fraction", "alpha"},
                              "estimator");
  EstimatorConfig c;
  if (!j.contains("model") || !j.contains("algorithm"))
    throw ValidationError("estimator: 'model' and 'algorithm' are required");
  c.model = model_from_string(j.at("model").get<std::string>());
  c.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  if (j.contains("calibration"))
    c.calibration = calibration_from_string(j.at("calibration").get<std::string>());
  if (j.contains("learner_m"))
    c.learner_m = detail::learner_from_json(j.at("learner_m"), "estimator.learner_m");
  if (j.contains("learner_g"))
    c.learner_g = detail::learner_from_json(j.at("learner_g"), "estimator.learner_g");
  if (j.contains("clip")) c.clip = j.at("clip").get<double>();
  if (j.contains("folds")) c.folds = j.at("folds").get<int>();
  if (j.contains("alg2_calib_fraction"))
    c.alg2_calib_fraction = j.at("alg2_calib_fraction").get<double>();
  if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
  c.validate();
  return c;
}

inline SimConfig sim_config_from_json(const json& j) {
  detail::reject_unknown_keys(j,
                              {"dgp", "estimators", "reps", "base_seed", "threads",
                               "output_dir", "save_datasets"},
                              "config");
  if (!j.contains("dgp") || !j.contains("estimators"))
    throw ValidationError("config: 'dgp' and 'estimators' are required");
  SimConfig c;
  c.dgp = dgp_spec_from_json(j.at("dgp"));
  for (const json& e : j.at("estimators")) c.estimators.push_back(estimator_config_from_json(e));
  if (j.contains("reps")) c.reps = j.at("reps").get<int>();
  if (j.contains("base_seed")) c.base_seed = j.at("base_seed").get<std::uint64_t>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("save_datasets")) c.save_datasets = j.at("save_datasets").get<bool>();
  c.validate();
  return c;
}

inline json sim_config_to_json(const SimConfig& c) {
  json j;
  j["dgp"]["name"] = to_string(c.dgp.name);
  j["dgp"]["n"] = c.dgp.n;
  j["dgp"]["p"] = c.dgp.p;
  for (const auto& [k, v] : c.dgp.params) j["dgp"]["params"][k] = v;
  j["estimators"] = json::array();
  for (const auto& e : c.estimators) {
    json ej;
    ej["model"] = to_string(e.model);
    ej["algorithm"] = to_string(e.algorithm);
    ej["calibration"] = to_string(e.calibration);
    ej["learner_m"] = detail::learner_to_json(e.learner_m);
    ej["learner_g"] = detail::learner_to_json(e.learner_g);
    ej["clip"] = e.clip;
    ej["folds"] = e.folds;
    ej["alg2_calib_fraction"] = e.alg2_calib_fraction;
    ej["alpha"] = e.alpha;
    j["estimators"].push_back(ej);
  }
  j["reps"] = c.reps;
  j["base_seed"] = c.base_seed;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  j["save_datasets"] = c.save_datasets;
  return j;
}

// ---------------------------------------------------------------------------
// Simulation driver
// ---------------------------------------------------------------------------

struct EstimatorSummary {
  std::string label;
  SummaryStats stats;
  std::size_t failures = 0; // reps with a NaN (failed) estimate
};

struct SimResult {
  std::vector<RepRecord> records; // rep-major order
  std::vector<EstimatorSummary> summaries;
};

namespace detail {

inline RepRecord base_record(const SimConfig& config, const EstimatorConfig& est, int rep,
                             double theta_true) {
  RepRecord r;
  r.rep = rep;
  r.dgp = dgp_label(config.dgp);
  r.n = config.dgp.n;
  r.p = config.dgp.p;
  r.model = to_string(est.model);
  r.algorithm = to_string(est.algorithm);
  r.calibration = to_string(est.calibration);
  r.learner_m = to_string(est.learner_m.kind);
  r.learner_g = to_string(est.learner_g.kind);
  r.clip = est.clip;
  r.theta_true = theta_true;
  return r;
}

inline void mark_failed(RepRecord& r, const std::string& what) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.theta_hat = r.se = r.ci_low = r.ci_high = nan;
  r.abs_error = r.ece_uniform = r.ece_quantile = r.norm_treated = r.norm_control = nan;
  r.covered = 0;
  r.error = what;
}

} // namespace detail

/// Monte Carlo driver. Repetition r derives its seeds as
/// rep_seed = mix64(base_seed, r), with the dataset drawn from
/// mix64(rep_seed, 0) and every estimator run with mix64(rep_seed, 1), so
/// all estimators within a repetition see the same dataset and fold
/// partitions (paired design). Outputs are identical for any thread count.
inline SimResult run_simulation(const SimConfig& config) {
  config.validate();
  const std::size_t n_est = config.estimators.size();
  const std::size_t reps = static_cast<std::size_t>(config.reps);

  SimResult result;
  result.records.resize(reps * n_est);

  if (!config.output_dir.empty())
    std::filesystem::create_directories(config.output_dir);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= reps) return;
      const std::uint64_t rep_seed = mix64(config.base_seed, r);
      const std::uint64_t data_seed = mix64(rep_seed, 0);
      const std::uint64_t est_seed = mix64(rep_seed, 1);
      Dataset ds;
      GroundTruth truth;
      bool data_ok = true;
      std::string data_error;
      try {
        auto gen = generate(config.dgp, data_seed);
        ds = std::move(gen.first);
        truth = std::move(gen.second);
        if (config.save_datasets && !config.output_dir.empty())
          write_dataset_csv(config.output_dir + "/dataset_rep" + std::to_string(r) + ".csv",
                            ds);
      } catch (const std::exception& ex) {
        data_ok = false;
        data_error = ex.what();
      }
      for (std::size_t e = 0; e < n_est; ++e) {
        RepRecord rec = detail::base_record(config, config.estimators[e], static_cast<int>(r),
                                            data_ok ? truth.ate : 0.0);
        const auto t0 = std::chrono::steady_clock::now();
        if (!data_ok) {
          detail::mark_failed(rec, data_error);
        } else {
          try {
            const EstimateResult res =
                estimate_ate(ds, config.estimators[e], est_seed, &truth);
            rec.theta_hat = res.theta_hat;
            rec.se = res.se;
            rec.ci_low = res.ci_low;
            rec.ci_high = res.ci_high;
            rec.covered = rec.ci_low <= rec.theta_true && rec.theta_true <= rec.ci_high;
            rec.abs_error = std::abs(res.theta_hat - rec.theta_true);
            rec.ece_uniform = res.diagnostics.at("ece_uniform");
            rec.ece_quantile = res.diagnostics.at("ece_quantile");
            rec.norm_treated = res.diagnostics.at("norm_treated");
            rec.norm_control = res.diagnostics.at("norm_control");
            rec.warnings = static_cast<int>(res.warnings.size());
          } catch (const std::exception& ex) {
            detail::mark_failed(rec, ex.what());
          }
        }
        rec.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        result.records[r * n_est + e] = std::move(rec);
      }
    }
  };

  const int n_threads = std::max(1, config.threads);
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (std::size_t e = 0; e < n_est; ++e) {
    EstimatorSummary summary;
    summary.label = estimator_label(config.estimators[e]);
    std::vector<RepOutcome> ok;
    double theta_true = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const RepRecord& rec = result.records[r * n_est + e];
      if (std::isfinite(rec.theta_hat)) {
        ok.push_back({rec.theta_hat, rec.ci_low, rec.ci_high});
        theta_true = rec.theta_true;
      } else {
        ++summary.failures;
      }
    }
    if (!ok.empty()) summary.stats = aggregate(ok, theta_true);
    result.summaries.push_back(std::move(summary));
  }

  if (!config.output_dir.empty()) {
    {
      std::ofstream out(config.output_dir + "/results.csv");
      out << kRepCsvHeader << "\n";
      for (const auto& rec : result.records) out << rep_record_csv_line(rec) << "\n";
    }
    {
      json j;
      for (const auto& s : result.summaries) {
        j[s.label] = {{"mae", s.stats.mae},
                      {"rmse", s.stats.rmse},
                      {"std_dev", s.stats.std_dev},
                      {"coverage", s.stats.coverage},
                      {"mean_ci_length", s.stats.mean_ci_length},
                      {"reps", s.stats.reps}};
      }
      std::ofstream out(config.output_dir + "/summary.json");
      out << j.dump(2) << "\n";
    }
    {
      std::ofstream out(config.output_dir + "/config_resolved.json");
      out << sim_config_to_json(config).dump(2) << "\n";
    }
  }
  return result;
}

/// Runs one estimator on an ingested CSV dataset. No ground truth exists, so
/// the oracle algorithm is rejected.
inline EstimateResult estimate_from_file(const std::string& data_path,
                                         const EstimatorConfig& config, std::uint64_t seed) {
  if (config.algorithm == Algorithm::oracle)
    throw ValidationError("estimate_from_file: oracle needs ground truth; not available");
  const Dataset ds = read_dataset_csv(data_path);
  return estimate_ate(ds, config, seed);
}

// ---------------------------------------------------------------------------
// Reading per-rep CSVs back (report command, determinism checks)
// ---------------------------------------------------------------------------

inline std::vector<RepRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open results file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("'" + path + "': empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRepCsvHeader)
    throw ValidationError("'" + path + "': unexpected results header");
  std::vector<RepRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto t = detail::split_csv_line(line);
    if (t.size() != 23)
      throw ValidationError("results row " + std::to_string(row) + ": expected 23 fields");
    RepRecord r;
    r.rep = static_cast<int>(detail::parse_double(t[0], "rep", row));
    r.dgp = t[1];
    r.n = static_cast<std::size_t>(detail::parse_double(t[2], "n", row));
    r.p = static_cast<std::size_t>(detail::parse_double(t[3], "p", row));
    r.model = t[4];
    r.algorithm = t[5];
    r.calibration = t[6];
    r.learner_m = t[7];
    r.learner_g = t[8];
    r.clip = detail::parse_double(t[9], "clip", row);
    r.theta_true = detail::parse_double(t[10], "theta_true", row);
    r.theta_hat = detail::parse_double(t[11], "theta_hat", row);
    r.se = detail::parse_double(t[12], "se", row);
    r.ci_low = detail::parse_double(t[13], "ci_low", row);
    r.ci_high = detail::parse_double(t[14], "ci_high", row);
    r.covered = static_cast<int>(detail::parse_double(t[15], "covered", row));
    r.abs_error = detail::parse_double(t[16], "abs_error", row);
    r.ece_uniform = detail::parse_double(t[17], "ece_uniform", row);
    r.ece_quantile = detail::parse_double(t[18], "ece_quantile", row);
    r.norm_treated = detail::parse_double(t[19], "norm_treated", row);
    r.norm_control = detail::parse_double(t[20], "norm_control", row);
    r.warnings = static_cast<int>(detail::parse_double(t[21], "warnings", row));
    r.runtime_ms = detail::parse_double(t[22], "runtime_ms", row);
    records.push_back(std::move(r));
  }
  return records;
}

/// Groups records by estimator identity and recomputes the summaries; NaN
/// (failed) repetitions are excluded from the statistics and counted
/// separately.
inline std::vector<EstimatorSummary> summarize_records(const std::vector<RepRecord>& records) {
  std::vector<std::string> order;
  std::vector<std::vector<const RepRecord*>> groups;
  for (const auto& r : records) {
    EstimatorConfig c;
    c.model = model_from_string(r.model);
    c.algorithm = algorithm_from_string(r.algorithm);
    c.calibration = calibration_from_string(r.calibration);
    c.learner_m = LearnerSpec::of(learner_kind_from_string(r.learner_m));
    c.learner_g = LearnerSpec::of(learner_kind_from_string(r.learner_g));
    c.clip = r.clip;
    const std::string label = estimator_label(c);
    std::size_t g = 0;
    for (; g < order.size(); ++g)
      if (order[g] == label) break;
    if (g == order.size()) {
      order.push_back(label);
      groups.emplace_back();
    }
    groups[g].push_back(&r);
  }
  std::vector<EstimatorSummary> out;
  for (std::size_t g = 0; g < order.size(); ++g) {
    EstimatorSummary s;
    s.label = order[g];
    std::vector<RepOutcome> ok;
    double theta_true = 0.0;
    for (const RepRecord* r : groups[g]) {
      if (std::isfinite(r->theta_hat)) {
        ok.push_back({r->theta_hat, r->ci_low, r->ci_high});
        theta_true = r->theta_true;
      } else {
        ++s.failures;
      }
    }
    if (!ok.empty()) s.stats = aggregate(ok, theta_true);
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace caldml
