#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "caldml/calibration.hpp"
#include "caldml/dgp.hpp"
#include "caldml/metrics.hpp"

using namespace caldml;

TEST_CASE("ece on the worked example") {
  const std::vector<double> probs{0.2, 0.2, 0.8, 0.8};
  const std::vector<double> labels{0, 1, 1, 1};
  REQUIRE(ece(probs, labels, 2, Binning::uniform, 1.0) == Catch::Approx(0.25).margin(1e-14));
}

TEST_CASE("ece vanishes for a single perfectly matched bin and stays in [0,1]") {
  const std::vector<double> labels{0, 1, 1, 0, 1};
  const std::vector<double> probs(5, 0.6); // mean(labels)
  REQUIRE(ece(probs, labels, 1) == Catch::Approx(0.0).margin(1e-14));

  Rng rng(70);
  std::vector<double> p(500), l(500);
  for (std::size_t i = 0; i < 500; ++i) {
    p[i] = rng.uniform();
    l[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  const double e = ece(p, l, 10);
  REQUIRE(e >= 0.0);
  REQUIRE(e <= 1.0);
}

TEST_CASE("ece of a calibrated population is within sampling noise") {
  Rng rng(71);
  const std::size_t n = 100000;
  std::vector<double> p(n), l(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = rng.uniform();
    l[i] = rng.bernoulli(p[i]) ? 1.0 : 0.0;
  }
  REQUIRE(ece(p, l, 10) <= 0.02);
  REQUIRE(ece(p, l, 10, Binning::quantile) <= 0.02);
}

TEST_CASE("quantile ece aligned with isotonic blocks is zero") {
  Rng rng(72);
  const std::size_t n = 400;
  std::vector<double> u(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = rng.uniform();
    d[i] = rng.bernoulli(u[i]) ? 1.0 : 0.0;
  }
  const IsotonicFit fit = pava(u, d);
  std::vector<double> calibrated(n);
  for (std::size_t i = 0; i < n; ++i) calibrated[i] = fit.predict(u[i]);
  // one bin per distinct calibrated value
  REQUIRE(ece(calibrated, d, static_cast<int>(n), Binning::quantile) <= 1e-10);
}

TEST_CASE("overlap ratio bins") {
  {
    const std::vector<double> probs{0.41, 0.42, 0.43};
    const std::vector<double> labels{1, 0, 1};
    const BinTable t = overlap_ratio_bins(probs, labels, 10);
    std::size_t total = 0, nonzero = 0;
    for (const auto& row : t.rows) {
      total += row.count;
      nonzero += row.count > 0 ? 1 : 0;
    }
    REQUIRE(total == 3);
    REQUIRE(nonzero == 1);
    REQUIRE(t.rows[4].count == 3);
    REQUIRE(t.rows[4].treated_count == 2);
  }
  {
    Rng rng(73);
    std::vector<double> probs(200), labels(200, 1.0);
    for (auto& v : probs) v = rng.uniform();
    const BinTable t = overlap_ratio_bins(probs, labels, 10);
    std::size_t total = 0;
    for (const auto& row : t.rows) {
      total += row.count;
      if (row.count > 0) REQUIRE(row.treated_fraction == 1.0);
    }
    REQUIRE(total == 200);
  }
}

TEST_CASE("standardized mean differences") {
  {
    // identical groups balance exactly
    Matrix x(4, 1);
    x(0, 0) = 1.0;
    x(1, 0) = 2.0;
    x(2, 0) = 1.0;
    x(3, 0) = 2.0;
    const std::vector<double> d{1, 1, 0, 0};
    const std::vector<double> w(4, 1.0);
    REQUIRE(smd(x, d, w)[0] == Catch::Approx(0.0).margin(1e-14));
  }
  {
    // treated (1,3), control (0,2): SMD = 1/sqrt(2)
    Matrix x(4, 1);
    x(0, 0) = 1.0;
    x(1, 0) = 3.0;
    x(2, 0) = 0.0;
    x(3, 0) = 2.0;
    const std::vector<double> d{1, 1, 0, 0};
    const std::vector<double> w(4, 1.0);
    REQUIRE(smd(x, d, w)[0] == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-12));
  }
  {
    // |SMD| is invariant to rescaling a covariate
    Rng rng(74);
    Matrix x(60, 2);
    std::vector<double> d(60), w(60);
    for (std::size_t i = 0; i < 60; ++i) {
      x(i, 0) = rng.normal();
      x(i, 1) = rng.normal() + 0.3;
      d[i] = i < 25 ? 1.0 : 0.0;
      w[i] = rng.uniform(0.5, 2.0);
    }
    const auto base = smd(x, d, w);
    Matrix scaled = x;
    for (std::size_t i = 0; i < 60; ++i) scaled(i, 1) *= -2.5;
    const auto after = smd(scaled, d, w);
    REQUIRE(std::abs(after[1]) == Catch::Approx(std::abs(base[1])).margin(1e-12));
    REQUIRE(after[0] == Catch::Approx(base[0]).margin(1e-12));
  }
  {
    // IPW weights from true propensities balance DGP 2
    auto [ds, truth] = gen_dgp2(4000, 0.5, 1.0, 75);
    std::vector<double> w(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i)
      w[i] = ds.d[i] == 1.0 ? 1.0 / truth.m0[i] : 1.0 / (1.0 - truth.m0[i]);
    for (double v : smd(ds.x, ds.d, w)) REQUIRE(std::abs(v) < 0.1);
  }
  {
    // zero pooled variance reports NaN
    Matrix x(4, 1, 2.0);
    const std::vector<double> d{1, 1, 0, 0};
    const std::vector<double> w(4, 1.0);
    REQUIRE(std::isnan(smd(x, d, w)[0]));
  }
}

TEST_CASE("normalization sums") {
  {
    const std::vector<double> d{1, 0};
    const std::vector<double> m{0.5, 0.5};
    const auto [t, c] = normalization_sums(d, m);
    REQUIRE(t == Catch::Approx(1.0));
    REQUIRE(c == Catch::Approx(1.0));
  }
  {
    Rng rng(76);
    const std::size_t n = 100000;
    std::vector<double> d(n), m(n, 0.3);
    for (auto& v : d) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
    const auto [t, c] = normalization_sums(d, m);
    REQUIRE(t == Catch::Approx(1.0).margin(0.02));
    REQUIRE(c == Catch::Approx(1.0).margin(0.02));
  }
}

TEST_CASE("aggregate summary statistics") {
  {
    const std::vector<RepOutcome> all_exact(5, {2.0, 1.5, 2.5});
    const SummaryStats s = aggregate(all_exact, 2.0);
    REQUIRE(s.mae == 0.0);
    REQUIRE(s.rmse == 0.0);
    REQUIRE(s.std_dev == 0.0);
    REQUIRE(s.coverage == 1.0);
    REQUIRE(s.mean_ci_length == Catch::Approx(1.0));
  }
  {
    const std::vector<RepOutcome> off{{1.0, 0.0, 2.0}, {3.0, 2.5, 3.5}};
    const SummaryStats s = aggregate(off, 2.0);
    REQUIRE(s.mae == Catch::Approx(1.0));
    REQUIRE(s.rmse == Catch::Approx(1.0));
    REQUIRE(s.coverage == Catch::Approx(0.5));
  }
  {
    // permutation invariance and the bias-variance identity
    Rng rng(77);
    std::vector<RepOutcome> reps;
    for (int i = 0; i < 40; ++i) {
      const double t = 1.0 + rng.normal() * 0.2;
      reps.push_back({t, t - 0.3, t + 0.3});
    }
    const SummaryStats a = aggregate(reps, 1.0);
    std::reverse(reps.begin(), reps.end());
    const SummaryStats b = aggregate(reps, 1.0);
    REQUIRE(a.mae == Catch::Approx(b.mae).margin(1e-15));
    REQUIRE(a.rmse == Catch::Approx(b.rmse).margin(1e-15));

    double bias = 0.0;
    for (const auto& r : reps) bias += r.theta_hat - 1.0;
    bias /= reps.size();
    const double k = double(reps.size());
    REQUIRE(a.rmse * a.rmse ==
            Catch::Approx(bias * bias + a.std_dev * a.std_dev * (k - 1.0) / k).margin(1e-12));
    REQUIRE(a.rmse * a.rmse >= a.std_dev * a.std_dev * (k - 1.0) / k - 1e-12);
  }
}
