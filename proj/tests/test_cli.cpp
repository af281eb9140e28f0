#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "caldml/harness.hpp"

using namespace caldml;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path temp_dir(const std::string& name) {
  const fs::path dir =
      fs::temp_directory_path() / ("caldml_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out_path = dir / "stdout.txt";
  const fs::path err_path = dir / "stderr.txt";
  const std::string cmd = std::string(CALDML_CLI_PATH) + " " + args + " >" +
                          out_path.string() + " 2>" + err_path.string();
  const int status = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out_path);
  res.err = slurp(err_path);
  return res;
}

std::vector<json> stdout_json_lines(const std::string& out) {
  std::vector<json> lines;
  std::istringstream ss(out);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    lines.push_back(json::parse(line)); // throws if stdout is not JSON lines
  }
  return lines;
}

void write_sim_config(const fs::path& path, int reps) {
  json j;
  j["dgp"] = {{"name", "dgp2"}, {"n", 100}, {"params", {{"overlap", 0.5}, {"theta0", 1.0}}}};
  j["estimators"] = json::array({{{"model", "irm"},
                                  {"algorithm", "alg1"},
                                  {"learner_m", "logit"},
                                  {"learner_g", "linear"}}});
  j["reps"] = reps;
  j["base_seed"] = 7;
  std::ofstream out(path);
  out << j.dump(2);
}

std::size_t csv_data_rows(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t rows = 0;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (!line.empty()) ++rows;
  }
  return rows;
}

} // namespace

TEST_CASE("cli: missing config file exits 2 naming the path") {
  const fs::path dir = temp_dir("missing");
  const CliResult res =
      run_cli("simulate --config /nonexistent/conf.json --out " + dir.string(), dir);
  REQUIRE(res.exit_code == 2);
  REQUIRE(res.err.find("/nonexistent/conf.json") != std::string::npos);
}

TEST_CASE("cli: simulate writes outputs and honors --reps override") {
  const fs::path dir = temp_dir("simulate");
  const fs::path config_path = dir / "config.json";
  write_sim_config(config_path, 5);
  const fs::path out_dir = dir / "out";
  const CliResult res = run_cli("simulate --config " + config_path.string() + " --out " +
                                    out_dir.string() + " --reps 2 --threads 1",
                                dir);
  REQUIRE(res.exit_code == 0);
  const auto lines = stdout_json_lines(res.out);
  REQUIRE(lines.size() == 1);
  REQUIRE(lines[0]["reps"] == 2);
  REQUIRE(csv_data_rows(out_dir / "results.csv") == 2);
  std::ifstream echo(out_dir / "config_resolved.json");
  const json resolved = json::parse(echo);
  REQUIRE(resolved["reps"] == 2); // the override is echoed
  REQUIRE(fs::exists(out_dir / "summary.json"));
}

TEST_CASE("cli: CALDML_THREADS is the fallback for --threads") {
  const fs::path dir = temp_dir("env_threads");
  const fs::path config_path = dir / "config.json";
  write_sim_config(config_path, 2);
  const fs::path out_dir = dir / "out";
  const fs::path out_path = dir / "stdout.txt";
  const std::string cmd = "CALDML_THREADS=3 " + std::string(CALDML_CLI_PATH) +
                          " simulate --config " + config_path.string() + " --out " +
                          out_dir.string() + " >" + out_path.string() + " 2>/dev/null";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  std::ifstream echo(out_dir / "config_resolved.json");
  const json resolved = json::parse(echo);
  REQUIRE(resolved["threads"] == 3);
}

TEST_CASE("cli: estimate matches the in-process result") {
  const fs::path dir = temp_dir("estimate");
  auto [ds, truth] = gen_dgp2(1200, 0.5, 1.0, 99);
  const fs::path data_path = dir / "data.csv";
  write_dataset_csv(data_path.string(), ds);

  const CliResult res = run_cli(
      "estimate --data " + data_path.string() +
          " --model irm --algorithm alg5 --calibration isotonic --learner-m logit"
          " --learner-g linear --seed 42",
      dir);
  REQUIRE(res.exit_code == 0);
  const auto lines = stdout_json_lines(res.out);
  REQUIRE(lines.size() == 1);
  const double theta = lines[0]["theta_hat"].get<double>();
  REQUIRE(std::isfinite(theta));
  REQUIRE(std::abs(theta - 1.0) < 0.5);

  EstimatorConfig config;
  config.model = Model::irm;
  config.algorithm = Algorithm::alg5;
  config.calibration = CalibrationMethod::isotonic;
  config.learner_m = LearnerSpec::of(LearnerKind::logit);
  config.learner_g = LearnerSpec::of(LearnerKind::linear);
  const EstimateResult oracle = estimate_from_file(data_path.string(), config, 42);
  REQUIRE(theta == oracle.theta_hat);
  REQUIRE(lines[0]["se"].get<double>() == oracle.se);
}

TEST_CASE("cli: estimate validates flags with exit code 2") {
  const fs::path dir = temp_dir("estimate_bad");
  auto [ds, truth] = gen_dgp2(50, 0.5, 1.0, 1);
  const fs::path data_path = dir / "data.csv";
  write_dataset_csv(data_path.string(), ds);

  REQUIRE(run_cli("estimate --data " + data_path.string() +
                      " --model irm --algorithm alg1 --clip 0.6",
                  dir)
              .exit_code == 2);
  REQUIRE(run_cli("estimate --data " + data_path.string() +
                      " --model ipw --algorithm alg2 --calibration isotonic",
                  dir)
              .exit_code == 2);
}

TEST_CASE("cli: diagnose emits calibration and balance tables") {
  const fs::path dir = temp_dir("diagnose");
  auto [ds, truth] = gen_dgp2(400, 0.5, 1.0, 21);
  const fs::path data_path = dir / "data.csv";
  write_dataset_csv(data_path.string(), ds);
  {
    std::ofstream scores(dir / "scores.txt");
    for (double m : truth.m0) scores << fmt17(m) << "\n";
  }
  const CliResult res = run_cli("diagnose --data " + data_path.string() + " --scores " +
                                    (dir / "scores.txt").string() + " --out " +
                                    (dir / "diag").string(),
                                dir);
  REQUIRE(res.exit_code == 0);
  const auto lines = stdout_json_lines(res.out);
  REQUIRE(lines.size() == 1);
  REQUIRE(lines[0]["ece_uniform"].get<double>() < 0.1); // true propensities are calibrated
  // bin counts sum to n
  std::ifstream bins(dir / "diag" / "bins.csv");
  std::string line;
  std::getline(bins, line); // header
  std::size_t total = 0;
  while (std::getline(bins, line)) {
    if (line.empty()) continue;
    const auto tok = line.find(',');
    std::size_t c = 0, field = 0;
    std::string cur;
    for (char ch : line + ",") {
      if (ch == ',') {
        if (field == 3) c = std::stoul(cur);
        cur.clear();
        ++field;
      } else {
        cur += ch;
      }
    }
    total += c;
  }
  REQUIRE(total == ds.n());
  REQUIRE(fs::exists(dir / "diag" / "smd.csv"));
}

TEST_CASE("cli: diagnose with constant mean scores has zero single-bin ECE") {
  const fs::path dir = temp_dir("diagnose_zero");
  Dataset ds;
  ds.y = {1.0, 2.0, 3.0, 4.0};
  ds.d = {1.0, 0.0, 1.0, 0.0};
  ds.x = Matrix(4, 1);
  for (int i = 0; i < 4; ++i) ds.x(i, 0) = i;
  const fs::path data_path = dir / "data.csv";
  write_dataset_csv(data_path.string(), ds);
  {
    std::ofstream scores(dir / "scores.txt");
    for (int i = 0; i < 4; ++i) scores << "0.5\n";
  }
  const CliResult res = run_cli("diagnose --data " + data_path.string() + " --scores " +
                                    (dir / "scores.txt").string() + " --bins 1 --out " +
                                    (dir / "diag").string(),
                                dir);
  REQUIRE(res.exit_code == 0);
  const auto lines = stdout_json_lines(res.out);
  REQUIRE(lines[0]["ece_uniform"].get<double>() == 0.0);
}

TEST_CASE("cli: report reproduces the emitted summary") {
  const fs::path dir = temp_dir("report");
  const fs::path config_path = dir / "config.json";
  write_sim_config(config_path, 4);
  const fs::path out_dir = dir / "out";
  REQUIRE(run_cli("simulate --config " + config_path.string() + " --out " + out_dir.string() +
                      " --threads 1",
                  dir)
              .exit_code == 0);

  const CliResult res = run_cli("report --in " + out_dir.string(), dir);
  REQUIRE(res.exit_code == 0);
  const auto lines = stdout_json_lines(res.out);
  REQUIRE(lines.size() == 1);

  std::ifstream in(out_dir / "summary.json");
  const json summary = json::parse(in);
  const std::string label = lines[0]["label"].get<std::string>();
  REQUIRE(summary.contains(label));
  for (const char* key : {"mae", "rmse", "std_dev", "coverage", "mean_ci_length"})
    REQUIRE(std::abs(lines[0][key].get<double>() - summary[label][key].get<double>()) <=
            1e-12);
  REQUIRE(lines[0]["failures"] == 0);

  const fs::path empty = temp_dir("report_empty");
  REQUIRE(run_cli("report --in " + empty.string(), dir).exit_code == 2);
}
