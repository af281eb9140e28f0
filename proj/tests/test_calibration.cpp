#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "caldml/calibration.hpp"
#include "caldml/rng.hpp"
#include "oracles.hpp"

using namespace caldml;

TEST_CASE("pava fits the stated examples") {
  {
    // already non-decreasing: fitted equals the labels
    const std::vector<double> u{0.1, 0.3, 0.5, 0.9};
    const std::vector<double> d{0.0, 0.2, 0.2, 1.0};
    const IsotonicFit fit = pava(u, d);
    for (std::size_t i = 0; i < u.size(); ++i)
      REQUIRE(fit.predict(u[i]) == Catch::Approx(d[i]).margin(1e-14));
  }
  {
    const IsotonicFit fit = pava({0.1, 0.2, 0.3}, {1.0, 0.0, 1.0});
    REQUIRE(fit.predict(0.1) == Catch::Approx(0.5).margin(1e-14));
    REQUIRE(fit.predict(0.2) == Catch::Approx(0.5).margin(1e-14));
    REQUIRE(fit.predict(0.3) == Catch::Approx(1.0).margin(1e-14));
  }
  {
    // ties are pre-merged into a single block
    const IsotonicFit fit = pava({0.2, 0.2}, {0.0, 1.0});
    REQUIRE(fit.block_values.size() == 1);
    REQUIRE(fit.predict(0.2) == Catch::Approx(0.5).margin(1e-14));
  }
  REQUIRE_THROWS_AS(pava({}, {}), ValidationError);
}

TEST_CASE("pava conserves mass and satisfies the in-sample calibration property") {
  Rng rng(41);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 1 + rng.bounded(500);
    std::vector<double> u(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = rng.bounded(10) == 0 && i > 0 ? u[i - 1] : rng.uniform(); // some ties
      d[i] = rng.bernoulli(u[i]) ? 1.0 : 0.0;
    }
    const IsotonicFit fit = pava(u, d);
    double wsum = 0.0, wvsum = 0.0;
    for (std::size_t b = 0; b < fit.block_values.size(); ++b) {
      wsum += fit.block_weights[b];
      wvsum += fit.block_weights[b] * fit.block_values[b];
      if (b > 0) REQUIRE(fit.block_values[b] >= fit.block_values[b - 1]);
    }
    REQUIRE(wvsum / wsum == Catch::Approx(mean(d)).margin(1e-12));

    // mean of labels within every distinct fitted value equals the value
    std::map<double, std::pair<double, double>> groups;
    for (std::size_t i = 0; i < n; ++i) {
      auto& g = groups[fit.predict(u[i])];
      g.first += d[i];
      g.second += 1.0;
    }
    for (const auto& [v, g] : groups) REQUIRE(std::abs(g.first / g.second - v) <= 1e-10);
  }
}

TEST_CASE("pava equals exhaustive isotonic least squares on small inputs") {
  Rng rng(42);
  for (int inst = 0; inst < 120; ++inst) {
    const std::size_t n = 1 + rng.bounded(8);
    std::vector<double> u(n), d(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = rng.uniform();
      d[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      w[i] = rng.uniform(0.5, 2.0);
    }
    std::vector<std::size_t> ord(n);
    for (std::size_t i = 0; i < n; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });
    std::vector<double> ds, ws, us;
    for (std::size_t i : ord) {
      ds.push_back(d[i]);
      ws.push_back(w[i]);
      us.push_back(u[i]);
    }
    const oracle::IsoFit brute = oracle::isotonic_enumeration(ds, ws);
    const IsotonicFit fit = pava(u, d, w);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = fit.predict(us[i]);
      sse += ws[i] * (ds[i] - v) * (ds[i] - v);
      REQUIRE(v == Catch::Approx(brute.fitted[i]).margin(1e-9));
    }
    REQUIRE(std::abs(sse - brute.sse) <= 1e-9);
  }
}

TEST_CASE("isotonic prediction clamps and stays monotone") {
  const IsotonicFit fit = pava({0.2, 0.4, 0.6, 0.8}, {0.0, 0.0, 1.0, 1.0});
  REQUIRE(fit.predict(0.05) == Catch::Approx(fit.block_values.front()));
  REQUIRE(fit.predict(0.95) == Catch::Approx(fit.block_values.back()));
  REQUIRE(fit.predict(0.4) == Catch::Approx(0.0).margin(1e-14));
  Rng rng(43);
  for (int i = 0; i < 200; ++i) {
    double a = rng.uniform(-0.5, 1.5), b = rng.uniform(-0.5, 1.5);
    if (a > b) std::swap(a, b);
    REQUIRE(fit.predict(a) <= fit.predict(b));
  }
}

TEST_CASE("platt smoothed targets and degenerate fits") {
  {
    // constant scores: the MLE maps everything to the mean smoothed target.
    // N0=8, N1=2 gives targets 1/10 and 3/4.
    std::vector<double> scores(10, 0.3);
    std::vector<double> labels(10, 0.0);
    labels[0] = labels[1] = 1.0;
    const PlattFit fit = platt_fit(scores, labels);
    const double expected = (8.0 * (1.0 / 10.0) + 2.0 * (3.0 / 4.0)) / 10.0;
    REQUIRE(fit.predict(0.3) == Catch::Approx(expected).margin(1e-6));
  }
  {
    const PlattFit fit = platt_fit({0.1, 0.5, 0.9, 0.2, 0.4}, {1, 1, 1, 1, 1});
    REQUIRE(fit.degenerate);
    REQUIRE(fit.predict(0.7) == Catch::Approx(6.0 / 7.0).margin(1e-12));
  }
  {
    const PlattFit fit = platt_fit({0.1, 0.5, 0.9}, {0, 0, 0});
    REQUIRE(fit.degenerate);
    REQUIRE(fit.predict(0.2) == Catch::Approx(1.0 / 5.0).margin(1e-12));
  }
}

TEST_CASE("platt fit matches a grid-search MLE when labels are independent") {
  const std::size_t n = 10000;
  Rng rng(44);
  std::vector<double> scores(n), labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  const PlattFit fit = platt_fit(scores, labels);
  REQUIRE(std::abs(fit.a) < 0.1);

  std::size_t n1 = 0;
  for (double l : labels) n1 += l == 1.0;
  const double tp = (double(n1) + 1.0) / (double(n1) + 2.0);
  const double tn = 1.0 / (double(n - n1) + 2.0);
  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = a * scores[i] + b;
      const double t = labels[i] == 1.0 ? tp : tn;
      f += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - (1.0 - t) * z;
    }
    return f;
  };
  double grid_best = std::numeric_limits<double>::infinity();
  for (double a = -2.0; a <= 2.0; a += 0.05)
    for (double b = -2.0; b <= 2.0; b += 0.05) grid_best = std::min(grid_best, objective(a, b));
  REQUIRE(objective(fit.a, fit.b) <= grid_best + 1e-6);
}

TEST_CASE("platt scaling is consistent on already-calibrated scores") {
  const std::size_t n = 100000;
  Rng rng(45);
  std::vector<double> scores(n), labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = expit(rng.normal());
    labels[i] = rng.bernoulli(scores[i]) ? 1.0 : 0.0;
  }
  const PlattFit fit = platt_fit(scores, labels);
  double l2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = fit.predict(scores[i]) - scores[i];
    l2 += diff * diff;
  }
  REQUIRE(std::sqrt(l2 / n) <= 0.02);
}

TEST_CASE("venn-abers formula, ordering and regularization") {
  Rng rng(46);
  for (int inst = 0; inst < 60; ++inst) {
    const std::size_t n = 2 + rng.bounded(39);
    std::vector<double> scores(n), labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.uniform();
      labels[i] = rng.bernoulli(scores[i]) ? 1.0 : 0.0;
    }
    std::vector<double> tests;
    for (int t = 0; t < 3; ++t) tests.push_back(rng.uniform());
    const auto out = venn_abers(scores, labels, tests);
    for (std::size_t t = 0; t < tests.size(); ++t) {
      const auto& o = out[t];
      REQUIRE(o.p0 >= 0.0);
      REQUIRE(o.p1 <= 1.0);
      REQUIRE(o.p0 <= o.p1 + 1e-12);
      REQUIRE(o.p == Catch::Approx(o.p1 + 0.5 * o.p0 * o.p0 - 0.5 * o.p1 * o.p1).margin(1e-12));
      const double pbar = (o.p0 + o.p1) / 2.0;
      REQUIRE(std::abs(o.p - 0.5) <= std::abs(pbar - 0.5) + 1e-12);
      REQUIRE(o.p >= o.p0 - 1e-12);
      REQUIRE(o.p <= o.p1 + 1e-12);

      // independent naive refit oracle (minimax isotonic formula)
      std::vector<double> u = scores, d = labels;
      u.push_back(tests[t]);
      d.push_back(0.0);
      const double p0 = oracle::isotonic_refit_value_at(u, d, tests[t]);
      d.back() = 1.0;
      const double p1 = oracle::isotonic_refit_value_at(u, d, tests[t]);
      REQUIRE(o.p0 == Catch::Approx(p0).margin(1e-9));
      REQUIRE(o.p1 == Catch::Approx(p1).margin(1e-9));
    }
  }
  // (p0,p1) = (0.2, 0.4) merges to 0.34
  REQUIRE(0.4 + 0.5 * 0.04 - 0.5 * 0.16 == Catch::Approx(0.34).margin(1e-15));
}

TEST_CASE("clipping") {
  REQUIRE(clip_probs({0.0}, 0.01)[0] == 0.01);
  REQUIRE(clip_probs({0.5}, 0.01)[0] == 0.5);
  REQUIRE(clip_probs({1.0}, 1e-12)[0] == 1.0 - 1e-12);
  REQUIRE_THROWS_AS(clip_probs({0.5}, 0.0), ValidationError);
  REQUIRE_THROWS_AS(clip_probs({0.5}, 0.5), ValidationError);

  // raising the threshold never increases the largest inverse weight
  Rng rng(47);
  std::vector<double> p(200);
  for (auto& v : p) v = rng.uniform();
  double prev_max = std::numeric_limits<double>::infinity();
  for (double thr : {1e-12, 1e-6, 0.01, 0.05, 0.1}) {
    const auto clipped = clip_probs(p, thr);
    double mx = 0.0;
    for (double v : clipped) mx = std::max(mx, std::max(1.0 / v, 1.0 / (1.0 - v)));
    REQUIRE(mx <= prev_max + 1e-12);
    prev_max = mx;
  }
}

TEST_CASE("calibrator wrapper falls back to constants on single-class sets") {
  std::vector<std::string> warnings;
  const Calibrator iso = fit_calibrator(CalibrationMethod::isotonic, {0.2, 0.4, 0.9},
                                        {1.0, 1.0, 1.0}, &warnings);
  REQUIRE(warnings.size() == 1);
  REQUIRE(iso.predict(0.3) == 1.0);
  const Calibrator pl =
      fit_calibrator(CalibrationMethod::platt, {0.2, 0.4, 0.9}, {0.0, 0.0, 0.0}, &warnings);
  REQUIRE(pl.predict(0.3) == Catch::Approx(1.0 / 5.0).margin(1e-12));
  REQUIRE(warnings.size() == 2);
}
