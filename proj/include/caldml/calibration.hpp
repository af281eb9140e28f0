#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "caldml/core.hpp"
#include "caldml/errors.hpp"
#include "caldml/la.hpp"

namespace caldml {

/// Weighted isotonic least-squares fit, stored as blocks. knot_scores[b] is
/// the smallest training score in block b; evaluation is piecewise constant
/// and right-continuous at the knots.
struct IsotonicFit {
  std::vector<double> knot_scores;
  std::vector<double> block_values;
  std::vector<double> block_weights;

  double predict(double s) const {
    auto it = std::upper_bound(knot_scores.begin(), knot_scores.end(), s);
    if (it == knot_scores.begin()) return block_values.front();
    return block_values[static_cast<std::size_t>(it - knot_scores.begin()) - 1];
  }
};

/// Pool-adjacent-violators: the unique weighted least-squares fit among
/// non-decreasing functions of u. Ties in u are pre-merged into single
/// points with weight-summed, weight-averaged labels.
inline IsotonicFit pava(const std::vector<double>& u, const std::vector<double>& d,
                        const std::vector<double>& w = {}) {
  const std::size_t n = u.size();
  if (n == 0) throw ValidationError("pava: empty input");
  if (d.size() != n || (!w.empty() && w.size() != n))
    throw ValidationError("pava: length mismatch");
  for (double wi : w)
    if (!(wi > 0.0)) throw ValidationError("pava: weights must be positive");

  std::vector<std::size_t> ord(n);
  for (std::size_t i = 0; i < n; ++i) ord[i] = i;
  std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
    if (u[a] != u[b]) return u[a] < u[b];
    return a < b;
  });

  // tie merge
  std::vector<double> pu, pv, pw;
  for (std::size_t i : ord) {
    const double wi = w.empty() ? 1.0 : w[i];
    if (!pu.empty() && pu.back() == u[i]) {
      const double tot = pw.back() + wi;
      pv.back() = (pv.back() * pw.back() + d[i] * wi) / tot;
      pw.back() = tot;
    } else {
      pu.push_back(u[i]);
      pv.push_back(d[i]);
      pw.push_back(wi);
    }
  }

  // pool adjacent violators
  std::vector<std::size_t> start; // first merged-point index of each block
  std::vector<double> val, wt;
  for (std::size_t j = 0; j < pu.size(); ++j) {
    start.push_back(j);
    val.push_back(pv[j]);
    wt.push_back(pw[j]);
    while (val.size() > 1 && val[val.size() - 2] > val.back()) {
      const double tot = wt[wt.size() - 2] + wt.back();
      val[val.size() - 2] = (val[val.size() - 2] * wt[wt.size() - 2] + val.back() * wt.back()) / tot;
      wt[wt.size() - 2] = tot;
      val.pop_back();
      wt.pop_back();
      start.pop_back();
    }
  }

  IsotonicFit fit;
  fit.block_values = std::move(val);
  fit.block_weights = std::move(wt);
  fit.knot_scores.reserve(start.size());
  for (std::size_t s : start) fit.knot_scores.push_back(pu[s]);
  return fit;
}

inline double isotonic_predict(const IsotonicFit& fit, double s) { return fit.predict(s); }

/// Platt sigmoid p(s) = 1 / (1 + exp(a*s + b)).
struct PlattFit {
  double a = 0.0;
  double b = 0.0;
  bool degenerate = false;

  double predict(double s) const { return expit(-(a * s + b)); }
};

/// Maximum-likelihood sigmoid fit against smoothed targets
/// t+ = (N1+1)/(N1+2) and t- = 1/(N0+2), via damped Newton. A single-class
/// input returns the degenerate fit mapping every score to the smoothed
/// class rate.
inline PlattFit platt_fit(const std::vector<double>& scores, const std::vector<double>& labels,
                          double tol = 1e-10, int max_iter = 200) {
  const std::size_t n = scores.size();
  if (n == 0 || labels.size() != n) throw ValidationError("platt_fit: bad input");
  std::size_t n1 = 0;
  for (double l : labels) n1 += l == 1.0 ? 1 : 0;
  const std::size_t n0 = n - n1;
  const double t_pos = (static_cast<double>(n1) + 1.0) / (static_cast<double>(n1) + 2.0);
  const double t_neg = 1.0 / (static_cast<double>(n0) + 2.0);

  if (n1 == 0 || n0 == 0) {
    const double rate = n1 == 0 ? t_neg : t_pos;
    PlattFit fit;
    fit.a = 0.0;
    fit.b = std::log(1.0 / rate - 1.0);
    fit.degenerate = true;
    return fit;
  }

  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = labels[i] == 1.0 ? t_pos : t_neg;

  // objective F(a,b) = sum_i [log(1+e^{z_i}) - (1-t_i) z_i], z = a*s + b
  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = a * scores[i] + b;
      f += detail::log1pexp(z) - (1.0 - t[i]) * z;
    }
    return f;
  };

  double a = 0.0;
  double b = std::log((static_cast<double>(n0) + 1.0) / (static_cast<double>(n1) + 1.0));
  double f = objective(a, b);
  for (int iter = 0; iter < max_iter; ++iter) {
    double ga = 0.0, gb = 0.0, haa = 1e-12, hab = 0.0, hbb = 1e-12;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = a * scores[i] + b;
      const double q = expit(z); // 1 - p
      const double r = q - (1.0 - t[i]);
      const double wi = q * (1.0 - q);
      ga += r * scores[i];
      gb += r;
      haa += wi * scores[i] * scores[i];
      hab += wi * scores[i];
      hbb += wi;
    }
    if (std::abs(ga) < tol && std::abs(gb) < tol) break;
    const double det = haa * hbb - hab * hab;
    double da = -(hbb * ga - hab * gb) / det;
    double db = -(haa * gb - hab * ga) / det;
    double step = 1.0;
    double fa = f;
    for (int half = 0; half < 60; ++half) {
      fa = objective(a + step * da, b + step * db);
      if (fa < f) break;
      step *= 0.5;
    }
    if (fa >= f) break;
    a += step * da;
    b += step * db;
    if (std::abs(step * da) < tol && std::abs(step * db) < tol) {
      f = fa;
      break;
    }
    f = fa;
  }
  return PlattFit{a, b, false};
}

/// Inductive Venn-Abers pair plus the merged, regularized probability
/// p = p1 + p0^2/2 - p1^2/2.
struct VennAbersOutput {
  double p0 = 0.0;
  double p1 = 0.0;
  double p = 0.0;
};

/// For each test score s: p0 is the isotonic fit on the calibration set
/// augmented with (s, 0), evaluated at s; p1 the same with label 1. Naive
/// per-test-point refits; quadratic at worst, fine at desk scale.
inline std::vector<VennAbersOutput> venn_abers(const std::vector<double>& fit_scores,
                                               const std::vector<double>& fit_labels,
                                               const std::vector<double>& test_scores) {
  if (fit_scores.empty() || fit_scores.size() != fit_labels.size())
    throw ValidationError("venn_abers: bad calibration set");
  std::vector<VennAbersOutput> out;
  out.reserve(test_scores.size());
  std::vector<double> u(fit_scores), d(fit_labels);
  u.push_back(0.0);
  d.push_back(0.0);
  for (double s : test_scores) {
    u.back() = s;
    d.back() = 0.0;
    const double p0 = pava(u, d).predict(s);
    d.back() = 1.0;
    const double p1 = pava(u, d).predict(s);
    out.push_back({p0, p1, p1 + 0.5 * p0 * p0 - 0.5 * p1 * p1});
  }
  return out;
}

/// Maps every entry into [threshold, 1 - threshold].
inline std::vector<double> clip_probs(std::vector<double> p, double threshold) {
  if (!(threshold > 0.0 && threshold < 0.5))
    throw ValidationError("clip_probs: threshold outside (0, 0.5)");
  for (double& v : p) v = std::min(std::max(v, threshold), 1.0 - threshold);
  return p;
}

inline double clip_prob(double p, double threshold) {
  return std::min(std::max(p, threshold), 1.0 - threshold);
}

/// Fitted calibrator used by the estimation pipelines. A calibration set
/// with a single treatment class degrades to a constant map (platt uses its
/// smoothed class rate, the others the class rate itself).
struct Calibrator {
  CalibrationMethod kind = CalibrationMethod::none;
  bool constant = false;
  double constant_value = 0.0;
  IsotonicFit iso;
  PlattFit platt;
  std::vector<double> va_scores, va_labels;

  double predict(double s) const {
    if (constant) return constant_value;
    switch (kind) {
      case CalibrationMethod::none: return s;
      case CalibrationMethod::isotonic: return iso.predict(s);
      case CalibrationMethod::platt: return platt.predict(s);
      case CalibrationMethod::venn_abers:
        return venn_abers(va_scores, va_labels, {s})[0].p;
    }
    return s;
  }

  std::vector<double> predict(const std::vector<double>& s) const {
    if (!constant && kind == CalibrationMethod::venn_abers) {
      std::vector<double> out(s.size());
      const auto va = venn_abers(va_scores, va_labels, s);
      for (std::size_t i = 0; i < s.size(); ++i) out[i] = va[i].p;
      return out;
    }
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = predict(s[i]);
    return out;
  }
};

inline Calibrator fit_calibrator(CalibrationMethod kind, const std::vector<double>& scores,
                                 const std::vector<double>& labels,
                                 std::vector<std::string>* warnings = nullptr) {
  if (scores.empty() || scores.size() != labels.size())
    throw ValidationError("fit_calibrator: bad calibration set");
  Calibrator cal;
  cal.kind = kind;
  if (kind == CalibrationMethod::none) return cal;

  bool any0 = false, any1 = false;
  for (double l : labels) (l == 1.0 ? any1 : any0) = true;
  if (!any0 || !any1) {
    if (warnings)
      warnings->push_back("calibration set has a single treatment class; using a constant map");
    if (kind == CalibrationMethod::platt) {
      cal.platt = platt_fit(scores, labels);
      cal.constant = true;
      cal.constant_value = cal.platt.predict(0.0);
    } else {
      cal.constant = true;
      cal.constant_value = mean(labels);
    }
    return cal;
  }

  switch (kind) {
    case CalibrationMethod::isotonic:
      cal.iso = pava(scores, labels);
      break;
    case CalibrationMethod::platt:
      cal.platt = platt_fit(scores, labels);
      break;
    case CalibrationMethod::venn_abers:
      cal.va_scores = scores;
      cal.va_labels = labels;
      break;
    case CalibrationMethod::none:
      break;
  }
  return cal;
}

} // namespace caldml
