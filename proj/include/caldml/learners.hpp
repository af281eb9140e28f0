#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "caldml/errors.hpp"
#include "caldml/la.hpp"
#include "caldml/rng.hpp"

namespace caldml {

enum class LearnerKind { logit, linear, gbt, rf };
enum class Task { classify, regress };

inline const char* to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::logit: return "logit";
    case LearnerKind::linear: return "linear";
    case LearnerKind::gbt: return "gbt";
    case LearnerKind::rf: return "rf";
  }
  return "?";
}

inline LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "logit") return LearnerKind::logit;
  if (s == "linear") return LearnerKind::linear;
  if (s == "gbt") return LearnerKind::gbt;
  if (s == "rf") return LearnerKind::rf;
  throw ValidationError("unknown learner kind '" + s + "'");
}

/// Learner selection plus hyperparameter overrides. Defaults:
///   gbt:   rounds=100, learning_rate=0.1, max_depth=3, min_leaf=5
///   rf:    trees=200, min_leaf=5, bootstrap=1,
///          feature_fraction = sqrt(p)/p (classify) or 1/3 (regress)
///   logit: l2=1e-6, max_iter=100, tol=1e-8
struct LearnerSpec {
  LearnerKind kind = LearnerKind::logit;
  std::map<std::string, double> hyper;

  double get(const std::string& name, double fallback) const {
    auto it = hyper.find(name);
    return it == hyper.end() ? fallback : it->second;
  }

  static LearnerSpec of(LearnerKind k) {
    LearnerSpec s;
    s.kind = k;
    return s;
  }
};

// ---------------------------------------------------------------------------
// Fitted model representations
// ---------------------------------------------------------------------------

struct ConstantModel {
  double value = 0.0;
};

/// beta[0] is the intercept, beta[1..p] the feature coefficients.
struct LinearModel {
  std::vector<double> beta;
};

struct LogisticModel {
  std::vector<double> beta;
};

struct TreeNode {
  int feature = -1; // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;
  int right = -1;
};

struct TreeModel {
  std::vector<TreeNode> nodes;

  double predict_row(const double* row) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }
};

struct GbtModel {
  bool logistic = false;
  double f0 = 0.0;
  double learning_rate = 0.1;
  std::vector<TreeModel> trees;
};

struct RfModel {
  bool classify = false;
  std::vector<TreeModel> trees;
};

struct FittedModel {
  Task task = Task::regress;
  std::size_t p = 0;
  std::variant<ConstantModel, LinearModel, LogisticModel, TreeModel, GbtModel, RfModel> impl;
};

// ---------------------------------------------------------------------------
// CART regression trees
// ---------------------------------------------------------------------------

/// A split must improve weighted SSE by more than kSplitGainTol * (node sum
/// of w*t^2); filters floating-point noise so constant targets stay a single
/// leaf. Test oracles use the same rule.
inline constexpr double kSplitGainTol = 1e-12;
inline constexpr int kUnlimitedDepth = 1 << 20;

namespace detail {

/// Per-feature element order, computed once per row multiset and reused
/// across boosting rounds.
struct TreePresort {
  const Matrix* x = nullptr;
  std::vector<int> elems;                // row ids; duplicates allowed
  std::vector<std::vector<int>> order;   // order[f]: elem positions sorted by x value

  TreePresort(const Matrix& xm, std::vector<int> rows) : x(&xm), elems(std::move(rows)) {
    const std::size_t p = xm.cols();
    const std::size_t m = elems.size();
    order.resize(p);
    std::vector<int> base(m);
    for (std::size_t i = 0; i < m; ++i) base[i] = static_cast<int>(i);
    for (std::size_t f = 0; f < p; ++f) {
      order[f] = base;
      std::sort(order[f].begin(), order[f].end(), [&](int a, int b) {
        const double va = xm(elems[a], f), vb = xm(elems[b], f);
        if (va != vb) return va < vb;
        return a < b;
      });
    }
  }
};

struct GrowNode {
  double w = 0.0, wy = 0.0, wyy = 0.0;
  int cnt = 0;
  int depth = 0;
  bool active = false;
  int best_f = -1;
  double best_thr = 0.0;
  double best_gain = 0.0;
  int left = -1, right = -1;
  // per-feature scan state
  double run_w = 0.0, run_wy = 0.0;
  int run_cnt = 0;
  double last_val = 0.0;
  bool has_last = false;
  std::vector<std::uint8_t> fmask; // empty = all features allowed
};

/// Level-wise greedy CART on presorted features. Splits at midpoints of
/// consecutive distinct values; ties resolved to the lowest feature index,
/// then the lowest threshold (scan order + strict improvement).
inline TreeModel grow_tree(const TreePresort& ps, const double* target_by_row,
                           const double* weight_by_elem, int max_depth, int min_leaf,
                           double feature_fraction, Rng* rng,
                           std::vector<double>* train_pred = nullptr,
                           std::vector<int>* train_leaf = nullptr) {
  const Matrix& x = *ps.x;
  const std::size_t m = ps.elems.size();
  const std::size_t p = x.cols();
  if (m == 0) throw ValidationError("grow_tree: empty input");
  min_leaf = std::max(1, min_leaf);

  std::vector<GrowNode> g(1);
  std::vector<int> node_of(m, 0);
  for (std::size_t e = 0; e < m; ++e) {
    const double w = weight_by_elem ? weight_by_elem[e] : 1.0;
    const double t = target_by_row[ps.elems[e]];
    g[0].w += w;
    g[0].wy += w * t;
    g[0].wyy += w * t * t;
    g[0].cnt += 1;
  }

  const int feats_per_split =
      feature_fraction >= 1.0
          ? static_cast<int>(p)
          : std::max(1, static_cast<int>(std::ceil(feature_fraction * static_cast<double>(p))));

  std::vector<int> frontier{0};
  std::vector<int> fpool(p);
  while (!frontier.empty()) {
    std::vector<int> active;
    for (int id : frontier) {
      GrowNode& nd = g[id];
      nd.active = nd.depth < max_depth && nd.cnt >= 2 * min_leaf && nd.w > 0.0;
      if (!nd.active) continue;
      nd.best_f = -1;
      nd.best_gain = kSplitGainTol * (nd.wyy + 1e-300);
      if (feats_per_split < static_cast<int>(p)) {
        nd.fmask.assign(p, 0);
        for (std::size_t i = 0; i < p; ++i) fpool[i] = static_cast<int>(i);
        for (int i = 0; i < feats_per_split; ++i) {
          const std::size_t j = i + static_cast<std::size_t>(rng->bounded(p - i));
          std::swap(fpool[i], fpool[j]);
          nd.fmask[fpool[i]] = 1;
        }
      } else {
        nd.fmask.clear();
      }
      active.push_back(id);
    }
    if (active.empty()) break;

    for (std::size_t f = 0; f < p; ++f) {
      for (int id : active) {
        g[id].run_w = g[id].run_wy = 0.0;
        g[id].run_cnt = 0;
        g[id].has_last = false;
      }
      for (int e : ps.order[f]) {
        GrowNode& nd = g[node_of[e]];
        if (!nd.active) continue;
        if (!nd.fmask.empty() && !nd.fmask[f]) continue;
        const double v = x(ps.elems[e], f);
        if (nd.has_last && v > nd.last_val && nd.run_cnt >= min_leaf &&
            nd.cnt - nd.run_cnt >= min_leaf) {
          const double wl = nd.run_w, wr = nd.w - nd.run_w;
          if (wl > 0.0 && wr > 0.0) {
            const double syl = nd.run_wy, syr = nd.wy - nd.run_wy;
            const double gain = syl * syl / wl + syr * syr / wr - nd.wy * nd.wy / nd.w;
            if (gain > nd.best_gain) {
              nd.best_gain = gain;
              nd.best_f = static_cast<int>(f);
              nd.best_thr = nd.last_val + (v - nd.last_val) / 2.0;
            }
          }
        }
        const double w = weight_by_elem ? weight_by_elem[e] : 1.0;
        nd.run_w += w;
        nd.run_wy += w * target_by_row[ps.elems[e]];
        nd.run_cnt += 1;
        nd.last_val = v;
        nd.has_last = true;
      }
    }

    std::vector<int> next;
    for (int id : active) {
      if (g[id].best_f < 0) {
        g[id].active = false;
        continue;
      }
      g[id].left = static_cast<int>(g.size());
      g.emplace_back();
      g[id].right = static_cast<int>(g.size());
      g.emplace_back();
      g[g[id].left].depth = g[g[id].right].depth = g[id].depth + 1;
      next.push_back(g[id].left);
      next.push_back(g[id].right);
    }
    for (std::size_t e = 0; e < m; ++e) {
      const GrowNode& nd = g[node_of[e]];
      if (nd.left < 0 || !nd.active) continue;
      const int child =
          x(ps.elems[e], nd.best_f) <= nd.best_thr ? nd.left : nd.right;
      node_of[e] = child;
      GrowNode& c = g[child];
      const double w = weight_by_elem ? weight_by_elem[e] : 1.0;
      const double t = target_by_row[ps.elems[e]];
      c.w += w;
      c.wy += w * t;
      c.wyy += w * t * t;
      c.cnt += 1;
    }
    frontier = std::move(next);
  }

  TreeModel model;
  model.nodes.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    TreeNode& n = model.nodes[i];
    if (g[i].left >= 0 && g[i].active) {
      n.feature = g[i].best_f;
      n.threshold = g[i].best_thr;
      n.left = g[i].left;
      n.right = g[i].right;
    } else {
      n.feature = -1;
      n.value = g[i].w > 0.0 ? g[i].wy / g[i].w : 0.0;
    }
  }
  if (train_pred) {
    train_pred->resize(m);
    for (std::size_t e = 0; e < m; ++e) {
      int i = node_of[e];
      (*train_pred)[e] = g[i].w > 0.0 ? g[i].wy / g[i].w : 0.0;
    }
  }
  if (train_leaf) {
    train_leaf->assign(node_of.begin(), node_of.end());
  }
  return model;
}

} // namespace detail

/// Greedy binary CART minimizing weighted squared error. Degenerate input
/// (constant targets, n < 2*min_leaf) yields a single-leaf tree.
inline FittedModel fit_tree(const Matrix& x, const std::vector<double>& targets,
                            const std::vector<double>& weights, int max_depth, int min_leaf) {
  if (x.rows() == 0 || targets.size() != x.rows())
    throw ValidationError("fit_tree: rows/targets mismatch");
  if (!weights.empty() && weights.size() != x.rows())
    throw ValidationError("fit_tree: weights length mismatch");
  std::vector<int> rows(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
  detail::TreePresort ps(x, rows);
  TreeModel tree = detail::grow_tree(ps, targets.data(),
                                     weights.empty() ? nullptr : weights.data(), max_depth,
                                     min_leaf, 1.0, nullptr);
  return FittedModel{Task::regress, x.cols(), std::move(tree)};
}

// ---------------------------------------------------------------------------
// Logistic regression (IRLS)
// ---------------------------------------------------------------------------

namespace detail {

inline double log1pexp(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double logistic_linear_index(const Matrix& x, const std::vector<double>& beta,
                                    std::size_t i) {
  double z = beta[0];
  const double* row = x.row(i);
  for (std::size_t j = 0; j < x.cols(); ++j) z += beta[j + 1] * row[j];
  return z;
}

} // namespace detail

/// Penalized Bernoulli log-likelihood sum_i [d_i z_i - log(1+e^{z_i})]
/// - l2/2 * |beta|^2, with z = beta0 + x.beta. All coefficients, including
/// the intercept, are penalized.
inline double logistic_penalized_loglik(const Matrix& x, const std::vector<double>& d,
                                        double l2, const std::vector<double>& beta) {
  double ll = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double z = detail::logistic_linear_index(x, beta, i);
    ll += d[i] * z - detail::log1pexp(z);
  }
  double pen = 0.0;
  for (double b : beta) pen += b * b;
  return ll - 0.5 * l2 * pen;
}

inline std::vector<double> logistic_penalized_grad(const Matrix& x, const std::vector<double>& d,
                                                   double l2, const std::vector<double>& beta) {
  std::vector<double> grad(beta.size(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double r = d[i] - expit(detail::logistic_linear_index(x, beta, i));
    grad[0] += r;
    const double* row = x.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) grad[j + 1] += r * row[j];
  }
  for (std::size_t j = 0; j < beta.size(); ++j) grad[j] -= l2 * beta[j];
  return grad;
}

/// IRLS with step halving, so the penalized log-likelihood is non-decreasing
/// across iterations. `trace`, when given, records the objective after each
/// accepted step. Throws ComputeError if the weighted normal equations are
/// singular (possible only with l2 = 0, e.g. under complete separation).
inline FittedModel fit_logistic(const Matrix& x, const std::vector<double>& d, double l2,
                                int max_iter = 100, double tol = 1e-8,
                                std::vector<double>* trace = nullptr) {
  if (x.rows() == 0 || d.size() != x.rows())
    throw ValidationError("fit_logistic: rows/labels mismatch");
  const std::size_t q = x.cols() + 1;
  std::vector<double> beta(q, 0.0);
  double ll = logistic_penalized_loglik(x, d, l2, beta);
  if (trace) {
    trace->clear();
    trace->push_back(ll);
  }
  for (int iter = 0; iter < max_iter; ++iter) {
    std::vector<double> grad = logistic_penalized_grad(x, d, l2, beta);
    Matrix h(q, q);
    for (std::size_t j = 0; j < q; ++j) h(j, j) = l2;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double pi = expit(detail::logistic_linear_index(x, beta, i));
      const double w = pi * (1.0 - pi);
      const double* row = x.row(i);
      h(0, 0) += w;
      for (std::size_t j = 0; j < x.cols(); ++j) {
        h(j + 1, 0) += w * row[j];
        for (std::size_t k = 0; k <= j; ++k) h(j + 1, k + 1) += w * row[j] * row[k];
      }
    }
    Matrix chol = h;
    if (!cholesky_inplace(chol))
      throw ComputeError("fit_logistic: singular weighted normal equations (separation?)");
    std::vector<double> delta = cholesky_solve(chol, grad);

    double step = 1.0;
    std::vector<double> cand(q);
    double cand_ll = ll;
    for (int half = 0; half < 40; ++half) {
      for (std::size_t j = 0; j < q; ++j) cand[j] = beta[j] + step * delta[j];
      cand_ll = logistic_penalized_loglik(x, d, l2, cand);
      if (cand_ll >= ll) break;
      step *= 0.5;
    }
    if (cand_ll < ll) break; // no ascent direction left
    double max_change = 0.0;
    for (std::size_t j = 0; j < q; ++j)
      max_change = std::max(max_change, std::abs(cand[j] - beta[j]));
    beta = cand;
    ll = cand_ll;
    if (trace) trace->push_back(ll);
    if (max_change < tol) break;
  }
  return FittedModel{Task::classify, x.cols(), LogisticModel{std::move(beta)}};
}

// ---------------------------------------------------------------------------
// Linear regression
// ---------------------------------------------------------------------------

/// Least squares with intercept via normal equations with 1e-10 ridge jitter.
inline FittedModel fit_linear(const Matrix& x, const std::vector<double>& y) {
  if (x.rows() == 0 || y.size() != x.rows())
    throw ValidationError("fit_linear: rows/targets mismatch");
  const std::size_t q = x.cols() + 1;
  Matrix a(q, q);
  std::vector<double> rhs(q, 0.0);
  for (std::size_t j = 0; j < q; ++j) a(j, j) = 1e-10;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* row = x.row(i);
    a(0, 0) += 1.0;
    rhs[0] += y[i];
    for (std::size_t j = 0; j < x.cols(); ++j) {
      a(j + 1, 0) += row[j];
      rhs[j + 1] += row[j] * y[i];
      for (std::size_t k = 0; k <= j; ++k) a(j + 1, k + 1) += row[j] * row[k];
    }
  }
  std::vector<double> beta = spd_solve(std::move(a), rhs, "fit_linear");
  return FittedModel{Task::regress, x.cols(), LinearModel{std::move(beta)}};
}

// ---------------------------------------------------------------------------
// Gradient boosted trees
// ---------------------------------------------------------------------------

enum class GbtLoss { logistic, squared };

/// Stagewise regression trees on negative gradients. Initial score is
/// logit(mean) (logistic) or mean (squared); predictions are expit of the
/// accumulated score under logistic loss. Under logistic loss the terminal
/// regions take the standard one-step Newton value sum(d - p) / sum(p(1-p)),
/// matching common boosting implementations. A single-class logistic target
/// degenerates to a constant clipped probability.
inline FittedModel fit_gbt(const Matrix& x, const std::vector<double>& targets, GbtLoss loss,
                           const LearnerSpec& spec) {
  if (x.rows() == 0 || targets.size() != x.rows())
    throw ValidationError("fit_gbt: rows/targets mismatch");
  const int rounds = static_cast<int>(spec.get("rounds", 100));
  const double lr = spec.get("learning_rate", 0.1);
  const int max_depth = static_cast<int>(spec.get("max_depth", 3));
  const int min_leaf = static_cast<int>(spec.get("min_leaf", 5));
  if (lr <= 0.0 || lr > 1.0) throw ValidationError("fit_gbt: learning_rate outside (0,1]");

  const std::size_t n = x.rows();
  const double ybar = mean(targets);
  GbtModel model;
  model.logistic = loss == GbtLoss::logistic;
  model.learning_rate = lr;
  if (model.logistic) {
    if (ybar <= 0.0 || ybar >= 1.0) {
      const double p = std::clamp(ybar, 1e-12, 1.0 - 1e-12);
      return FittedModel{Task::classify, x.cols(), ConstantModel{p}};
    }
    model.f0 = logit(ybar);
  } else {
    model.f0 = ybar;
  }

  std::vector<int> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<int>(i);
  detail::TreePresort ps(x, std::move(rows));

  std::vector<double> score(n, model.f0), prob(n), resid(n), leaf_pred;
  std::vector<int> leaf_of;
  for (int r = 0; r < rounds; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      if (model.logistic) {
        prob[i] = expit(score[i]);
        resid[i] = targets[i] - prob[i];
      } else {
        resid[i] = targets[i] - score[i];
      }
    }
    TreeModel tree = detail::grow_tree(ps, resid.data(), nullptr, max_depth, min_leaf, 1.0,
                                       nullptr, &leaf_pred, model.logistic ? &leaf_of : nullptr);
    if (model.logistic) {
      std::vector<double> grad(tree.nodes.size(), 0.0), hess(tree.nodes.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        grad[leaf_of[i]] += resid[i];
        hess[leaf_of[i]] += prob[i] * (1.0 - prob[i]);
      }
      for (std::size_t j = 0; j < tree.nodes.size(); ++j)
        if (tree.nodes[j].feature < 0) tree.nodes[j].value = grad[j] / (hess[j] + 1e-12);
      for (std::size_t i = 0; i < n; ++i)
        score[i] += lr * tree.nodes[leaf_of[i]].value;
    } else {
      for (std::size_t i = 0; i < n; ++i) score[i] += lr * leaf_pred[i];
    }
    model.trees.push_back(std::move(tree));
  }
  return FittedModel{model.logistic ? Task::classify : Task::regress, x.cols(),
                     std::move(model)};
}

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

/// Bootstrap-bagged trees with per-split feature subsampling. Classification
/// probabilities are averages of leaf class fractions.
inline FittedModel fit_rf(const Matrix& x, const std::vector<double>& targets, Task task,
                          const LearnerSpec& spec, std::uint64_t seed) {
  if (x.rows() == 0 || targets.size() != x.rows())
    throw ValidationError("fit_rf: rows/targets mismatch");
  const int trees = static_cast<int>(spec.get("trees", 200));
  const int min_leaf = static_cast<int>(spec.get("min_leaf", 5));
  const bool bootstrap = spec.get("bootstrap", 1.0) != 0.0;
  const std::size_t p = x.cols();
  const double default_frac =
      task == Task::classify ? std::sqrt(static_cast<double>(p)) / static_cast<double>(p)
                             : 1.0 / 3.0;
  const double frac = spec.get("feature_fraction", default_frac);

  const std::size_t n = x.rows();
  Rng rng(seed);
  RfModel model;
  model.classify = task == Task::classify;
  for (int t = 0; t < trees; ++t) {
    std::vector<int> rows(n);
    if (bootstrap) {
      for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<int>(rng.bounded(n));
    } else {
      for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<int>(i);
    }
    detail::TreePresort ps(x, std::move(rows));
    model.trees.push_back(detail::grow_tree(ps, targets.data(), nullptr, kUnlimitedDepth,
                                            min_leaf, frac, &rng));
  }
  return FittedModel{task, p, std::move(model)};
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

inline std::vector<double> predict(const FittedModel& model, const Matrix& x) {
  if (x.cols() != model.p)
    throw ValidationError("predict: feature count mismatch (expected " +
                          std::to_string(model.p) + ", got " + std::to_string(x.cols()) + ")");
  const std::size_t n = x.rows();
  std::vector<double> out(n, 0.0);
  if (const auto* c = std::get_if<ConstantModel>(&model.impl)) {
    std::fill(out.begin(), out.end(), c->value);
  } else if (const auto* lin = std::get_if<LinearModel>(&model.impl)) {
    for (std::size_t i = 0; i < n; ++i) {
      double z = lin->beta[0];
      const double* row = x.row(i);
      for (std::size_t j = 0; j < x.cols(); ++j) z += lin->beta[j + 1] * row[j];
      out[i] = z;
    }
  } else if (const auto* lgt = std::get_if<LogisticModel>(&model.impl)) {
    for (std::size_t i = 0; i < n; ++i) {
      double z = lgt->beta[0];
      const double* row = x.row(i);
      for (std::size_t j = 0; j < x.cols(); ++j) z += lgt->beta[j + 1] * row[j];
      out[i] = expit(z);
    }
  } else if (const auto* tree = std::get_if<TreeModel>(&model.impl)) {
    for (std::size_t i = 0; i < n; ++i) out[i] = tree->predict_row(x.row(i));
  } else if (const auto* gbt = std::get_if<GbtModel>(&model.impl)) {
    for (std::size_t i = 0; i < n; ++i) {
      double f = gbt->f0;
      const double* row = x.row(i);
      for (const TreeModel& t : gbt->trees) f += gbt->learning_rate * t.predict_row(row);
      out[i] = gbt->logistic ? expit(f) : f;
    }
  } else if (const auto* rf = std::get_if<RfModel>(&model.impl)) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      const double* row = x.row(i);
      for (const TreeModel& t : rf->trees) s += t.predict_row(row);
      out[i] = s / static_cast<double>(rf->trees.size());
    }
  }
  return out;
}

/// Uniform fit interface used by the estimation pipelines.
inline FittedModel fit_learner(const LearnerSpec& spec, Task task, const Matrix& x,
                               const std::vector<double>& targets, std::uint64_t seed) {
  switch (spec.kind) {
    case LearnerKind::logit:
      if (task != Task::classify)
        throw ValidationError("learner 'logit' is classification-only");
      return fit_logistic(x, targets, spec.get("l2", 1e-6),
                          static_cast<int>(spec.get("max_iter", 100)), spec.get("tol", 1e-8));
    case LearnerKind::linear:
      if (task != Task::regress)
        throw ValidationError("learner 'linear' is regression-only");
      return fit_linear(x, targets);
    case LearnerKind::gbt:
      return fit_gbt(x, targets, task == Task::classify ? GbtLoss::logistic : GbtLoss::squared,
                     spec);
    case LearnerKind::rf:
      return fit_rf(x, targets, task, spec, seed);
  }
  throw ValidationError("unknown learner kind");
}

} // namespace caldml
