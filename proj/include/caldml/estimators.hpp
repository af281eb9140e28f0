#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "caldml/calibration.hpp"
#include "caldml/core.hpp"
#include "caldml/errors.hpp"
#include "caldml/learners.hpp"
#include "caldml/metrics.hpp"
#include "caldml/rng.hpp"

namespace caldml {

// Seed stream tags. Every random choice inside estimate_ate(seed) draws from
// mix64(seed, tag), with per-fold tags offset by the fold index; documented
// here because reproducing a run from outside relies on them.
inline constexpr std::uint64_t kSeedFolds = 1;        // K-fold partition
inline constexpr std::uint64_t kSeedSplitFolds = 2;   // alg4's independent 2-fold partition
inline constexpr std::uint64_t kSeedLearnerM = 0x100; // + fold index
inline constexpr std::uint64_t kSeedLearnerG1 = 0x200;
inline constexpr std::uint64_t kSeedLearnerG0 = 0x300;
inline constexpr std::uint64_t kSeedLearnerL = 0x400;
inline constexpr std::uint64_t kSeedNestedSplit = 0x500;   // + fold index (alg2)
inline constexpr std::uint64_t kSeedSplitLearnerM = 0x600; // + partition index (alg4)

/// Components of the linear score psi(w; theta, eta) = psi_a * theta + psi_b.
struct ScoreComponents {
  std::vector<double> psi_a;
  std::vector<double> psi_b;
};

/// Cross-fitted nuisances aligned with dataset rows. m_hat holds the final
/// (calibrated and clipped) propensities; fold_of records which fold each
/// row was scored in.
struct NuisanceEstimates {
  std::vector<double> m_hat;
  std::vector<double> g1_hat, g0_hat; // IRM outcome regressions
  std::vector<double> l_hat;          // PLR outcome regression E[Y|X]
  std::vector<int> fold_of;
};

namespace detail {

inline Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(idx[i], j);
  return out;
}

inline std::vector<double> gather(const std::vector<double>& v,
                                  const std::vector<std::size_t>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

inline double smoothed_class_rate(const std::vector<double>& labels) {
  std::size_t n1 = 0;
  for (double l : labels) n1 += l == 1.0 ? 1 : 0;
  const double n = static_cast<double>(labels.size());
  if (n1 == labels.size()) return (n + 1.0) / (n + 2.0);
  return 1.0 / (n + 2.0);
}

} // namespace detail

/// Score of the augmented inverse probability weighted (doubly robust)
/// moment: psi_a = -1 and
/// psi_b = (g1-g0)(x) + d(y-g1(x))/m(x) - (1-d)(y-g0(x))/(1-m(x)).
inline ScoreComponents irm_score(const Dataset& ds, const NuisanceEstimates& nuis) {
  const std::size_t n = ds.n();
  if (nuis.m_hat.size() != n || nuis.g1_hat.size() != n || nuis.g0_hat.size() != n)
    throw ValidationError("irm_score: nuisance vectors misaligned");
  ScoreComponents sc;
  sc.psi_a.assign(n, -1.0);
  sc.psi_b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = nuis.m_hat[i];
    if (m <= 0.0 || m >= 1.0)
      throw ComputeError("irm_score: propensity at 0 or 1 (clip before scoring)");
    sc.psi_b[i] = nuis.g1_hat[i] - nuis.g0_hat[i] +
                  ds.d[i] * (ds.y[i] - nuis.g1_hat[i]) / m -
                  (1.0 - ds.d[i]) * (ds.y[i] - nuis.g0_hat[i]) / (1.0 - m);
  }
  return sc;
}

/// Partialling-out score: with v = d - m(x), u = y - l(x),
/// psi(theta) = (u - theta v) v, i.e. psi_a = -v^2 and psi_b = u v.
inline ScoreComponents plr_score(const Dataset& ds, const NuisanceEstimates& nuis) {
  const std::size_t n = ds.n();
  if (nuis.m_hat.size() != n || nuis.l_hat.size() != n)
    throw ValidationError("plr_score: nuisance vectors misaligned");
  ScoreComponents sc;
  sc.psi_a.resize(n);
  sc.psi_b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = ds.d[i] - nuis.m_hat[i];
    const double u = ds.y[i] - nuis.l_hat[i];
    sc.psi_a[i] = -v * v;
    sc.psi_b[i] = u * v;
  }
  return sc;
}

struct SolveResult {
  double theta_hat = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double j0 = 0.0;
  double sigma2 = 0.0;
};

/// Solves mean(psi_a * theta + psi_b) = 0 and attaches the plug-in sandwich
/// variance sigma^2 = mean(psi(theta)^2) / J0^2 with J0 = mean(psi_a).
inline SolveResult solve_linear_score(const ScoreComponents& sc, double alpha) {
  const std::size_t n = sc.psi_a.size();
  if (n == 0 || sc.psi_b.size() != n) throw ValidationError("solve_linear_score: bad input");
  const double j0 = mean(sc.psi_a);
  if (std::abs(j0) < 1e-12)
    throw ComputeError("solve_linear_score: degenerate Jacobian (|mean psi_a| < 1e-12)");
  SolveResult res;
  res.j0 = j0;
  res.theta_hat = -mean(sc.psi_b) / j0;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = sc.psi_a[i] * res.theta_hat + sc.psi_b[i];
    ss += r * r;
  }
  res.sigma2 = ss / static_cast<double>(n) / (j0 * j0);
  res.se = std::sqrt(res.sigma2 / static_cast<double>(n));
  const double z = inv_normal_cdf(1.0 - alpha / 2.0);
  res.ci_low = res.theta_hat - z * res.se;
  res.ci_high = res.theta_hat + z * res.se;
  return res;
}

/// Horvitz-Thompson IPW estimator, exactly as written: the mean of
/// d*y/m - (1-d)*y/(1-m) with the empirical influence-function variance of
/// the summand.
inline EstimateResult ipw_estimate(const Dataset& ds, const std::vector<double>& m_used,
                                   double alpha) {
  const std::size_t n = ds.n();
  if (m_used.size() != n) throw ValidationError("ipw_estimate: propensity length mismatch");
  std::vector<double> summand(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = m_used[i];
    if (m <= 0.0 || m >= 1.0)
      throw ComputeError("ipw_estimate: propensity at 0 or 1 (clip before estimating)");
    summand[i] = ds.d[i] * ds.y[i] / m - (1.0 - ds.d[i]) * ds.y[i] / (1.0 - m);
  }
  EstimateResult res;
  res.theta_hat = mean(summand);
  res.se = std::sqrt(sample_variance(summand) / static_cast<double>(n));
  const double z = inv_normal_cdf(1.0 - alpha / 2.0);
  res.ci_low = res.theta_hat - z * res.se;
  res.ci_high = res.theta_hat + z * res.se;
  res.psi.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.psi[i] = summand[i] - res.theta_hat;
  res.m_used = m_used;
  return res;
}

// ---------------------------------------------------------------------------
// Cross-fitting pipelines
// ---------------------------------------------------------------------------

/// Raw cross-fitted propensity: for each fold, fit the classifier on the
/// complement and predict on the fold. Training labels of a single class
/// degrade to a smoothed constant rate with a recorded warning.
inline std::vector<double> cross_fit_propensity(const Dataset& ds, const FoldPartition& folds,
                                                const LearnerSpec& spec, std::uint64_t seed,
                                                std::uint64_t tag_base,
                                                std::vector<std::string>* warnings) {
  const std::size_t n = ds.n();
  std::vector<double> m_hat(n, 0.0);
  const auto fold_idx = folds.fold_indices();
  for (int k = 0; k < folds.k; ++k) {
    std::vector<std::size_t> train;
    train.reserve(n - fold_idx[k].size());
    for (std::size_t i = 0; i < n; ++i)
      if (folds.assignment[i] != k) train.push_back(i);
    const std::vector<double> d_train = detail::gather(ds.d, train);
    bool any0 = false, any1 = false;
    for (double l : d_train) (l == 1.0 ? any1 : any0) = true;
    if (!any0 || !any1) {
      if (warnings)
        warnings->push_back("propensity training set of fold " + std::to_string(k) +
                            " has a single treatment class; using a smoothed constant");
      const double rate = detail::smoothed_class_rate(d_train);
      for (std::size_t i : fold_idx[k]) m_hat[i] = rate;
      continue;
    }
    const Matrix x_train = detail::gather_rows(ds.x, train);
    const FittedModel model =
        fit_learner(spec, Task::classify, x_train, d_train, mix64(seed, tag_base + k));
    const Matrix x_test = detail::gather_rows(ds.x, fold_idx[k]);
    const std::vector<double> pred = predict(model, x_test);
    for (std::size_t i = 0; i < fold_idx[k].size(); ++i) m_hat[fold_idx[k][i]] = pred[i];
  }
  return m_hat;
}

/// Cross-fitted outcome regressions g(1,x) and g(0,x) for the interactive
/// model; fitted on the treated/control subsets of each training partition.
/// An empty arm makes the interactive model unidentifiable and raises.
inline void cross_fit_outcome_irm(const Dataset& ds, const FoldPartition& folds,
                                  const LearnerSpec& spec, std::uint64_t seed,
                                  std::vector<double>* g1_hat, std::vector<double>* g0_hat) {
  const std::size_t n = ds.n();
  g1_hat->assign(n, 0.0);
  g0_hat->assign(n, 0.0);
  const auto fold_idx = folds.fold_indices();
  for (int k = 0; k < folds.k; ++k) {
    std::vector<std::size_t> treated, control;
    for (std::size_t i = 0; i < n; ++i) {
      if (folds.assignment[i] == k) continue;
      (ds.d[i] == 1.0 ? treated : control).push_back(i);
    }
    const Matrix x_test = detail::gather_rows(ds.x, fold_idx[k]);
    for (int arm = 0; arm < 2; ++arm) {
      const auto& rows = arm == 1 ? treated : control;
      auto* out = arm == 1 ? g1_hat : g0_hat;
      if (rows.empty())
        throw ComputeError("irm: treatment arm d=" + std::to_string(arm) +
                           " is empty in the training set of fold " + std::to_string(k));
      const FittedModel model = fit_learner(
          spec, Task::regress, detail::gather_rows(ds.x, rows), detail::gather(ds.y, rows),
          mix64(seed, (arm == 1 ? kSeedLearnerG1 : kSeedLearnerG0) + k));
      const std::vector<double> pred = predict(model, x_test);
      for (std::size_t i = 0; i < fold_idx[k].size(); ++i) (*out)[fold_idx[k][i]] = pred[i];
    }
  }
}

/// Cross-fitted E[Y|X] for the partially linear model.
inline std::vector<double> cross_fit_outcome_plr(const Dataset& ds, const FoldPartition& folds,
                                                 const LearnerSpec& spec, std::uint64_t seed) {
  const std::size_t n = ds.n();
  std::vector<double> l_hat(n, 0.0);
  const auto fold_idx = folds.fold_indices();
  for (int k = 0; k < folds.k; ++k) {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < n; ++i)
      if (folds.assignment[i] != k) train.push_back(i);
    const FittedModel model =
        fit_learner(spec, Task::regress, detail::gather_rows(ds.x, train),
                    detail::gather(ds.y, train), mix64(seed, kSeedLearnerL + k));
    const std::vector<double> pred = predict(model, detail::gather_rows(ds.x, fold_idx[k]));
    for (std::size_t i = 0; i < fold_idx[k].size(); ++i) l_hat[fold_idx[k][i]] = pred[i];
  }
  return l_hat;
}

/// Calibrated (not yet clipped) propensities for the configured
/// sample-splitting algorithm.
inline std::vector<double> propensity_pipeline(const Dataset& ds, const EstimatorConfig& config,
                                               const FoldPartition& folds, std::uint64_t seed,
                                               const GroundTruth* truth,
                                               std::vector<std::string>* warnings) {
  const std::size_t n = ds.n();
  switch (config.algorithm) {
    case Algorithm::alg1:
      return cross_fit_propensity(ds, folds, config.learner_m, seed, kSeedLearnerM, warnings);

    case Algorithm::alg2: {
      // Nested split of each training partition: one part fits the
      // propensity learner, the other its calibrator.
      std::vector<double> m_tilde(n, 0.0);
      const auto fold_idx = folds.fold_indices();
      for (int k = 0; k < folds.k; ++k) {
        std::vector<std::size_t> complement;
        for (std::size_t i = 0; i < n; ++i)
          if (folds.assignment[i] != k) complement.push_back(i);
        auto [part1, part2] = split_within(complement, config.alg2_calib_fraction,
                                           mix64(seed, kSeedNestedSplit + k));
        if (part1.empty() || part2.empty())
          throw ValidationError("alg2: nested split produced an empty part");
        const std::vector<double> d1 = detail::gather(ds.d, part1);
        bool any0 = false, any1 = false;
        for (double l : d1) (l == 1.0 ? any1 : any0) = true;
        std::vector<double> scores2, scores_test;
        if (!any0 || !any1) {
          if (warnings)
            warnings->push_back("alg2 fold " + std::to_string(k) +
                                ": propensity training part has a single class");
          const double rate = detail::smoothed_class_rate(d1);
          scores2.assign(part2.size(), rate);
          scores_test.assign(fold_idx[k].size(), rate);
        } else {
          const FittedModel model =
              fit_learner(config.learner_m, Task::classify, detail::gather_rows(ds.x, part1),
                          d1, mix64(seed, kSeedLearnerM + k));
          scores2 = predict(model, detail::gather_rows(ds.x, part2));
          scores_test = predict(model, detail::gather_rows(ds.x, fold_idx[k]));
        }
        const Calibrator cal =
            fit_calibrator(config.calibration, scores2, detail::gather(ds.d, part2), warnings);
        const std::vector<double> calibrated = cal.predict(scores_test);
        for (std::size_t i = 0; i < fold_idx[k].size(); ++i)
          m_tilde[fold_idx[k][i]] = calibrated[i];
      }
      return m_tilde;
    }

    case Algorithm::alg3: {
      // Calibrate each test fold on its own scores and labels.
      std::vector<double> raw =
          cross_fit_propensity(ds, folds, config.learner_m, seed, kSeedLearnerM, warnings);
      std::vector<double> m_tilde(n, 0.0);
      for (const auto& idx : folds.fold_indices()) {
        const std::vector<double> scores = detail::gather(raw, idx);
        const Calibrator cal =
            fit_calibrator(config.calibration, scores, detail::gather(ds.d, idx), warnings);
        const std::vector<double> calibrated = cal.predict(scores);
        for (std::size_t i = 0; i < idx.size(); ++i) m_tilde[idx[i]] = calibrated[i];
      }
      return m_tilde;
    }

    case Algorithm::alg4: {
      // Independent 2-fold partition for the propensity; outcome nuisances
      // stay on the K-fold partition.
      const FoldPartition half = make_folds(n, 2, mix64(seed, kSeedSplitFolds));
      std::vector<double> m_tilde(n, 0.0);
      const auto half_idx = half.fold_indices();
      for (int j = 0; j < 2; ++j) {
        std::vector<std::size_t> train;
        for (std::size_t i = 0; i < n; ++i)
          if (half.assignment[i] != j) train.push_back(i);
        const std::vector<double> d_train = detail::gather(ds.d, train);
        bool any0 = false, any1 = false;
        for (double l : d_train) (l == 1.0 ? any1 : any0) = true;
        std::vector<double> scores;
        if (!any0 || !any1) {
          if (warnings)
            warnings->push_back("alg4 partition " + std::to_string(j) +
                                ": propensity training half has a single class");
          scores.assign(half_idx[j].size(), detail::smoothed_class_rate(d_train));
        } else {
          const FittedModel model =
              fit_learner(config.learner_m, Task::classify, detail::gather_rows(ds.x, train),
                          d_train, mix64(seed, kSeedSplitLearnerM + j));
          scores = predict(model, detail::gather_rows(ds.x, half_idx[j]));
        }
        const Calibrator cal = fit_calibrator(config.calibration, scores,
                                              detail::gather(ds.d, half_idx[j]), warnings);
        const std::vector<double> calibrated = cal.predict(scores);
        for (std::size_t i = 0; i < half_idx[j].size(); ++i)
          m_tilde[half_idx[j][i]] = calibrated[i];
      }
      return m_tilde;
    }

    case Algorithm::alg5: {
      // One calibrator on the pooled cross-fitted scores of all rows.
      std::vector<double> raw =
          cross_fit_propensity(ds, folds, config.learner_m, seed, kSeedLearnerM, warnings);
      const Calibrator cal = fit_calibrator(config.calibration, raw, ds.d, warnings);
      return cal.predict(raw);
    }

    case Algorithm::oracle:
      return truth->m0;
  }
  throw ValidationError("propensity_pipeline: unknown algorithm");
}

/// Binned decomposition of mean((m_hat - m0)^2) into a sharpness term
/// (count-weighted within-bin variance of m0 across m_hat quantile bins) and
/// a calibration term (count-weighted squared gap between bin means).
struct MseDecomposition {
  double total = 0.0;
  double sharpness = 0.0;
  double calibration = 0.0;
};

inline MseDecomposition decompose_mse(const std::vector<double>& m_hat,
                                      const std::vector<double>& m0, int n_bins) {
  const std::size_t n = m_hat.size();
  if (n == 0 || m0.size() != n) throw ValidationError("decompose_mse: bad input");
  if (n_bins < 1) throw ValidationError("decompose_mse: n_bins must be >= 1");
  const std::vector<double> edges = detail::quantile_edges(m_hat, n_bins);
  const std::size_t nbins = edges.size() + 1;
  std::vector<double> cnt(nbins, 0.0), s0(nbins, 0.0), ss0(nbins, 0.0), sh(nbins, 0.0);
  MseDecomposition out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = detail::quantile_bin_of(edges, m_hat[i]);
    cnt[b] += 1.0;
    s0[b] += m0[i];
    ss0[b] += m0[i] * m0[i];
    sh[b] += m_hat[i];
    out.total += (m_hat[i] - m0[i]) * (m_hat[i] - m0[i]);
  }
  out.total /= static_cast<double>(n);
  for (std::size_t b = 0; b < nbins; ++b) {
    if (cnt[b] == 0.0) continue;
    const double w = cnt[b] / static_cast<double>(n);
    const double mu0 = s0[b] / cnt[b];
    const double var0 = std::max(0.0, ss0[b] / cnt[b] - mu0 * mu0);
    const double muh = sh[b] / cnt[b];
    out.sharpness += w * var0;
    out.calibration += w * (mu0 - muh) * (mu0 - muh);
  }
  return out;
}

/// Runs the configured estimator on a dataset. `truth` is required for the
/// oracle algorithm and ignored otherwise. All randomness derives from
/// `seed` via the documented stream tags, so runs are reproducible.
inline EstimateResult estimate_ate(const Dataset& ds, const EstimatorConfig& config,
                                   std::uint64_t seed, const GroundTruth* truth = nullptr) {
  ds.validate();
  config.validate();
  if (config.algorithm == Algorithm::oracle) {
    if (truth == nullptr)
      throw ValidationError("estimate_ate: oracle algorithm requires ground truth");
    if (truth->m0.size() != ds.n())
      throw ValidationError("estimate_ate: ground truth misaligned with dataset");
  }
  const std::size_t n = ds.n();
  const FoldPartition folds = make_folds(n, config.folds, mix64(seed, kSeedFolds));
  std::vector<std::string> warnings;

  std::vector<double> m_tilde =
      propensity_pipeline(ds, config, folds, seed, truth, &warnings);
  std::vector<double> m_used = clip_probs(std::move(m_tilde), config.clip);

  EstimateResult result;
  if (config.model == Model::ipw) {
    result = ipw_estimate(ds, m_used, config.alpha);
  } else {
    NuisanceEstimates nuis;
    nuis.m_hat = m_used;
    nuis.fold_of = folds.assignment;
    ScoreComponents sc;
    if (config.model == Model::irm) {
      cross_fit_outcome_irm(ds, folds, config.learner_g, seed, &nuis.g1_hat, &nuis.g0_hat);
      sc = irm_score(ds, nuis);
    } else {
      nuis.l_hat = cross_fit_outcome_plr(ds, folds, config.learner_g, seed);
      sc = plr_score(ds, nuis);
    }
    const SolveResult sol = solve_linear_score(sc, config.alpha);
    result.theta_hat = sol.theta_hat;
    result.se = sol.se;
    result.ci_low = sol.ci_low;
    result.ci_high = sol.ci_high;
    result.psi.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      result.psi[i] = sc.psi_a[i] * sol.theta_hat + sc.psi_b[i];
    result.m_used = std::move(m_used);
    result.diagnostics["j0"] = sol.j0;
  }

  result.diagnostics["ece_uniform"] = ece(result.m_used, ds.d, 10, Binning::uniform);
  result.diagnostics["ece_quantile"] = ece(result.m_used, ds.d, 10, Binning::quantile);
  const auto norms = normalization_sums(ds.d, result.m_used);
  result.diagnostics["norm_treated"] = norms.first;
  result.diagnostics["norm_control"] = norms.second;
  result.warnings = std::move(warnings);
  result.diagnostics["n_warnings"] = static_cast<double>(result.warnings.size());
  return result;
}

} // namespace caldml
