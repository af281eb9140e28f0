#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "caldml/errors.hpp"
#include "caldml/la.hpp"
#include "caldml/learners.hpp"
#include "caldml/rng.hpp"

namespace caldml {

/// Observed triple (Y, D, X): outcome vector, binary treatment vector and
/// covariate matrix with one row per observation.
struct Dataset {
  std::vector<double> y;
  std::vector<double> d;
  Matrix x;

  std::size_t n() const { return y.size(); }
  std::size_t p() const { return x.cols(); }

  void validate() const {
    if (y.size() != d.size() || y.size() != x.rows())
      throw ValidationError("Dataset: inconsistent lengths");
    if (x.cols() < 1) throw ValidationError("Dataset: p must be >= 1");
    for (double v : y)
      if (!std::isfinite(v)) throw ValidationError("Dataset: non-finite outcome");
    for (double v : d)
      if (v != 0.0 && v != 1.0) throw ValidationError("Dataset: treatment must be 0 or 1");
    for (double v : x.data())
      if (!std::isfinite(v)) throw ValidationError("Dataset: non-finite covariate");
  }
};

/// True per-row propensities and the true average treatment effect of a
/// synthetic data generating process.
struct GroundTruth {
  std::vector<double> m0;
  double ate = 0.0;
};

/// Balanced K-fold assignment; assignment[i] in {0..K-1}.
struct FoldPartition {
  std::vector<int> assignment;
  int k = 0;

  std::vector<std::vector<std::size_t>> fold_indices() const {
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t i = 0; i < assignment.size(); ++i)
      folds[assignment[i]].push_back(i);
    return folds;
  }
};

/// Uniformly random balanced partition: shuffle indices with the seeded
/// generator, deal round-robin. Deterministic in (n, K, seed).
inline FoldPartition make_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("make_folds: K must be >= 2");
  if (n < static_cast<std::size_t>(k))
    throw ValidationError("make_folds: n < K gives an empty fold");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(idx);
  FoldPartition fp;
  fp.k = k;
  fp.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) fp.assignment[idx[i]] = static_cast<int>(i % k);
  return fp;
}

/// Splits an index set into two disjoint parts; the first receives
/// round(fraction * size) elements. Deterministic in all inputs.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_within(const std::vector<std::size_t>& indices, double fraction, std::uint64_t seed) {
  if (indices.size() < 2) throw ValidationError("split_within: need at least 2 indices");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ValidationError("split_within: fraction outside (0,1)");
  std::vector<std::size_t> shuffled = indices;
  Rng rng(seed);
  rng.shuffle(shuffled);
  const auto first_size = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(indices.size())));
  std::vector<std::size_t> first(shuffled.begin(), shuffled.begin() + first_size);
  std::vector<std::size_t> second(shuffled.begin() + first_size, shuffled.end());
  return {std::move(first), std::move(second)};
}

enum class Model { irm, plr, ipw };
enum class Algorithm { alg1, alg2, alg3, alg4, alg5, oracle };
enum class CalibrationMethod { none, isotonic, platt, venn_abers };

inline const char* to_string(Model m) {
  switch (m) {
    case Model::irm: return "irm";
    case Model::plr: return "plr";
    case Model::ipw: return "ipw";
  }
  return "?";
}

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::alg1: return "alg1";
    case Algorithm::alg2: return "alg2";
    case Algorithm::alg3: return "alg3";
    case Algorithm::alg4: return "alg4";
    case Algorithm::alg5: return "alg5";
    case Algorithm::oracle: return "oracle";
  }
  return "?";
}

inline const char* to_string(CalibrationMethod c) {
  switch (c) {
    case CalibrationMethod::none: return "none";
    case CalibrationMethod::isotonic: return "isotonic";
    case CalibrationMethod::platt: return "platt";
    case CalibrationMethod::venn_abers: return "venn_abers";
  }
  return "?";
}

inline Model model_from_string(const std::string& s) {
  if (s == "irm") return Model::irm;
  if (s == "plr") return Model::plr;
  if (s == "ipw") return Model::ipw;
  throw ValidationError("unknown model '" + s + "'");
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "alg1") return Algorithm::alg1;
  if (s == "alg2") return Algorithm::alg2;
  if (s == "alg3") return Algorithm::alg3;
  if (s == "alg4") return Algorithm::alg4;
  if (s == "alg5") return Algorithm::alg5;
  if (s == "oracle") return Algorithm::oracle;
  throw ValidationError("unknown algorithm '" + s + "'");
}

inline CalibrationMethod calibration_from_string(const std::string& s) {
  if (s == "none") return CalibrationMethod::none;
  if (s == "isotonic") return CalibrationMethod::isotonic;
  if (s == "platt") return CalibrationMethod::platt;
  if (s == "venn_abers") return CalibrationMethod::venn_abers;
  throw ValidationError("unknown calibration method '" + s + "'");
}

/// A single estimator configuration: causal model, sample-splitting
/// algorithm, calibration method, nuisance learners and tuning constants.
struct EstimatorConfig {
  Model model = Model::irm;
  Algorithm algorithm = Algorithm::alg1;
  CalibrationMethod calibration = CalibrationMethod::none;
  LearnerSpec learner_m = LearnerSpec::of(LearnerKind::logit);
  LearnerSpec learner_g = LearnerSpec::of(LearnerKind::linear);
  double clip = 1e-12;
  int folds = 5;
  // Share of the training partition used to fit the propensity learner in
  // the nested algorithm; the remainder fits the calibrator.
  double alg2_calib_fraction = 0.5;
  double alpha = 0.05;

  void validate() const {
    if (!(clip > 0.0 && clip < 0.5))
      throw ValidationError("EstimatorConfig: clip outside (0, 0.5)");
    if (folds < 2) throw ValidationError("EstimatorConfig: folds must be >= 2");
    if (!(alg2_calib_fraction > 0.0 && alg2_calib_fraction < 1.0))
      throw ValidationError("EstimatorConfig: alg2_calib_fraction outside (0,1)");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ValidationError("EstimatorConfig: alpha outside (0,1)");
    if (algorithm == Algorithm::alg1 && calibration != CalibrationMethod::none)
      throw ValidationError("EstimatorConfig: alg1 requires calibration = none");
    if (algorithm == Algorithm::oracle && calibration != CalibrationMethod::none)
      throw ValidationError("EstimatorConfig: oracle requires calibration = none");
    if (algorithm != Algorithm::alg1 && algorithm != Algorithm::oracle &&
        calibration == CalibrationMethod::none)
      throw ValidationError("EstimatorConfig: calibration algorithms need a calibrator");
    if (model == Model::ipw && algorithm != Algorithm::alg1 &&
        algorithm != Algorithm::alg5 && algorithm != Algorithm::oracle)
      throw ValidationError("EstimatorConfig: ipw supports only alg1, alg5 or oracle");
    if (learner_g.kind == LearnerKind::logit && model != Model::ipw)
      throw ValidationError("EstimatorConfig: learner_g 'logit' is classification-only");
    if (learner_m.kind == LearnerKind::linear)
      throw ValidationError("EstimatorConfig: learner_m 'linear' is regression-only");
  }
};

/// Result of one estimator run: point estimate, normal-based confidence
/// interval, per-row score at the estimate, the final propensities used and
/// scalar diagnostics.
struct EstimateResult {
  double theta_hat = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> psi;
  std::vector<double> m_used;
  std::map<std::string, double> diagnostics;
  std::vector<std::string> warnings;
};

} // namespace caldml
