#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "caldml/errors.hpp"
#include "caldml/la.hpp"

namespace caldml {

enum class Binning { uniform, quantile };

namespace detail {

/// Right-closed empirical quantile edges with duplicate-edge merging; the
/// returned vector holds the upper edge of every bin but the last. Values v
/// fall into the first bin with v <= edge.
inline std::vector<double> quantile_edges(std::vector<double> values, int n_bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> edges;
  const std::size_t n = values.size();
  for (int j = 1; j < n_bins; ++j) {
    std::size_t pos = static_cast<std::size_t>(
        std::ceil(static_cast<double>(j) * static_cast<double>(n) / n_bins));
    pos = std::min(std::max<std::size_t>(pos, 1), n) - 1;
    const double e = values[pos];
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  while (!edges.empty() && edges.back() >= values.back()) edges.pop_back();
  return edges;
}

inline std::size_t quantile_bin_of(const std::vector<double>& edges, double v) {
  return static_cast<std::size_t>(
      std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
}

inline std::size_t uniform_bin_of(int n_bins, double v) {
  const int b = static_cast<int>(v * n_bins);
  return static_cast<std::size_t>(std::min(std::max(b, 0), n_bins - 1));
}

} // namespace detail

/// lp expected calibration error over bins: per bin, the gap between the
/// treated fraction (accuracy) and the mean prediction (confidence),
/// count-weighted; empty bins contribute nothing.
inline double ece(const std::vector<double>& probs, const std::vector<double>& labels,
                  int n_bins, Binning binning = Binning::uniform, double p_norm = 1.0) {
  const std::size_t n = probs.size();
  if (n == 0 || labels.size() != n) throw ValidationError("ece: bad input");
  if (n_bins < 1) throw ValidationError("ece: n_bins must be >= 1");
  if (p_norm < 1.0) throw ValidationError("ece: p_norm must be >= 1");

  std::vector<double> edges;
  std::size_t nbins = static_cast<std::size_t>(n_bins);
  if (binning == Binning::quantile) {
    edges = detail::quantile_edges(probs, n_bins);
    nbins = edges.size() + 1;
  }
  std::vector<double> cnt(nbins, 0.0), acc(nbins, 0.0), conf(nbins, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = binning == Binning::uniform
                              ? detail::uniform_bin_of(n_bins, probs[i])
                              : detail::quantile_bin_of(edges, probs[i]);
    cnt[b] += 1.0;
    acc[b] += labels[i];
    conf[b] += probs[i];
  }
  double total = 0.0;
  for (std::size_t b = 0; b < nbins; ++b) {
    if (cnt[b] == 0.0) continue;
    const double gap = std::abs(acc[b] / cnt[b] - conf[b] / cnt[b]);
    total += cnt[b] / static_cast<double>(n) * std::pow(gap, p_norm);
  }
  return std::pow(total, 1.0 / p_norm);
}

/// Per-bin treated/untreated composition behind overlap-ratio plots.
struct BinTable {
  struct Row {
    double lower = 0.0, upper = 0.0;
    std::size_t count = 0, treated_count = 0;
    double mean_prediction = 0.0, treated_fraction = 0.0;
  };
  std::vector<Row> rows;
};

/// Uniform bins over [0,1] reporting treated and untreated counts per bin.
inline BinTable overlap_ratio_bins(const std::vector<double>& probs,
                                   const std::vector<double>& labels, int n_bins) {
  const std::size_t n = probs.size();
  if (n == 0 || labels.size() != n) throw ValidationError("overlap_ratio_bins: bad input");
  if (n_bins < 1) throw ValidationError("overlap_ratio_bins: n_bins must be >= 1");
  BinTable table;
  table.rows.resize(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    table.rows[b].lower = static_cast<double>(b) / n_bins;
    table.rows[b].upper = static_cast<double>(b + 1) / n_bins;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = table.rows[detail::uniform_bin_of(n_bins, probs[i])];
    row.count += 1;
    row.treated_count += labels[i] == 1.0 ? 1 : 0;
    row.mean_prediction += probs[i];
  }
  for (auto& row : table.rows) {
    if (row.count > 0) {
      row.mean_prediction /= static_cast<double>(row.count);
      row.treated_fraction = static_cast<double>(row.treated_count) / row.count;
    }
  }
  return table;
}

/// Weighted standardized mean differences per covariate. Weighted variances
/// use the frequency-weight convention, divisor sum(w) * (1 - sum(w^2) /
/// sum(w)^2); the unweighted case reduces to the n-1 sample variance. A zero
/// pooled variance yields NaN for that covariate.
inline std::vector<double> smd(const Matrix& x, const std::vector<double>& d,
                               const std::vector<double>& weights) {
  const std::size_t n = x.rows();
  if (n == 0 || d.size() != n || weights.size() != n)
    throw ValidationError("smd: bad input");
  bool any0 = false, any1 = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0)) throw ValidationError("smd: weights must be positive");
    (d[i] == 1.0 ? any1 : any0) = true;
  }
  if (!any0 || !any1) throw ValidationError("smd: both treatment groups must be nonempty");

  std::vector<double> out(x.cols());
  for (std::size_t k = 0; k < x.cols(); ++k) {
    double sw[2] = {0, 0}, swx[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      const int g = d[i] == 1.0 ? 1 : 0;
      sw[g] += weights[i];
      swx[g] += weights[i] * x(i, k);
    }
    const double mean1 = swx[1] / sw[1], mean0 = swx[0] / sw[0];
    double ss[2] = {0, 0}, sw2[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      const int g = d[i] == 1.0 ? 1 : 0;
      const double c = x(i, k) - (g == 1 ? mean1 : mean0);
      ss[g] += weights[i] * c * c;
      sw2[g] += weights[i] * weights[i];
    }
    double var[2];
    for (int g = 0; g < 2; ++g) {
      const double divisor = sw[g] * (1.0 - sw2[g] / (sw[g] * sw[g]));
      var[g] = divisor > 0.0 ? ss[g] / divisor : 0.0;
    }
    const double pooled = (var[1] + var[0]) / 2.0;
    out[k] = pooled > 0.0 ? (mean1 - mean0) / std::sqrt(pooled)
                          : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

/// Inverse-propensity weight normalization sums; both approach 1 when the
/// propensities are calibrated.
inline std::pair<double, double> normalization_sums(const std::vector<double>& d,
                                                    const std::vector<double>& m_tilde) {
  const std::size_t n = d.size();
  if (n == 0 || m_tilde.size() != n) throw ValidationError("normalization_sums: bad input");
  double treated = 0.0, control = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    treated += d[i] / m_tilde[i];
    control += (1.0 - d[i]) / (1.0 - m_tilde[i]);
  }
  return {treated / static_cast<double>(n), control / static_cast<double>(n)};
}

struct SummaryStats {
  double mae = 0.0;
  double rmse = 0.0;
  double std_dev = 0.0;
  double coverage = 0.0;
  double mean_ci_length = 0.0;
  std::size_t reps = 0;
};

struct RepOutcome {
  double theta_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

inline SummaryStats aggregate(const std::vector<RepOutcome>& results, double theta_true) {
  if (results.empty()) throw ValidationError("aggregate: no results");
  SummaryStats s;
  s.reps = results.size();
  std::vector<double> thetas;
  thetas.reserve(results.size());
  for (const auto& r : results) {
    const double err = r.theta_hat - theta_true;
    s.mae += std::abs(err);
    s.rmse += err * err;
    s.coverage += (r.ci_low <= theta_true && theta_true <= r.ci_high) ? 1.0 : 0.0;
    s.mean_ci_length += r.ci_high - r.ci_low;
    thetas.push_back(r.theta_hat);
  }
  const double nr = static_cast<double>(results.size());
  s.mae /= nr;
  s.rmse = std::sqrt(s.rmse / nr);
  s.coverage /= nr;
  s.mean_ci_length /= nr;
  s.std_dev = std::sqrt(sample_variance(thetas));
  return s;
}

} // namespace caldml
