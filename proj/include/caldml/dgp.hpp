#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "caldml/core.hpp"
#include "caldml/errors.hpp"
#include "caldml/la.hpp"
#include "caldml/rng.hpp"

namespace caldml {

inline constexpr double kPi = 3.14159265358979323846;

enum class DgpName { dgp1, dgp2, dgp3, dgp4 };

inline const char* to_string(DgpName n) {
  switch (n) {
    case DgpName::dgp1: return "dgp1";
    case DgpName::dgp2: return "dgp2";
    case DgpName::dgp3: return "dgp3";
    case DgpName::dgp4: return "dgp4";
  }
  return "?";
}

inline DgpName dgp_from_string(const std::string& s) {
  if (s == "dgp1") return DgpName::dgp1;
  if (s == "dgp2") return DgpName::dgp2;
  if (s == "dgp3") return DgpName::dgp3;
  if (s == "dgp4") return DgpName::dgp4;
  throw ValidationError("unknown dgp '" + s + "'");
}

// ---------------------------------------------------------------------------
// DGP 1: correlated Gaussian design, logistic treatment, interactive outcome
// ---------------------------------------------------------------------------

/// Index coefficients for DGP 1: beta_j = 1/j^2, b = beta' Sigma beta with
/// Toeplitz Sigma_jk = 0.5^|j-k|. c_d scales the logistic treatment index so
/// its latent R^2 equals r2_d (logistic noise variance pi^2/3); c_y the
/// analogous outcome scale.
struct Dgp1Coefficients {
  std::vector<double> beta;
  double b = 0.0;
  double c_d = 0.0;
  double c_y = 0.0;
};

inline Dgp1Coefficients dgp1_coefficients(std::size_t p, double r2_d, double r2_y) {
  Dgp1Coefficients c;
  c.beta.resize(p);
  for (std::size_t j = 0; j < p; ++j)
    c.beta[j] = 1.0 / (static_cast<double>(j + 1) * static_cast<double>(j + 1));
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < p; ++k)
      c.b += c.beta[j] * c.beta[k] *
             std::pow(0.5, std::abs(static_cast<double>(j) - static_cast<double>(k)));
  c.c_d = std::sqrt(kPi * kPi / 3.0 * r2_d / ((1.0 - r2_d) * c.b));
  c.c_y = std::sqrt(r2_y / ((1.0 - r2_y) * c.b));
  return c;
}

inline std::pair<Dataset, GroundTruth> gen_dgp1(std::size_t n, std::size_t p, double r2_d,
                                                double r2_y, double theta0,
                                                std::uint64_t seed) {
  if (n < 1 || p < 1) throw ValidationError("gen_dgp1: n and p must be >= 1");
  if (!(r2_d > 0.0 && r2_d < 1.0) || !(r2_y > 0.0 && r2_y < 1.0))
    throw ValidationError("gen_dgp1: r2_d and r2_y must lie in (0,1)");
  const Dgp1Coefficients coef = dgp1_coefficients(p, r2_d, r2_y);

  Matrix sigma(p, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < p; ++k)
      sigma(j, k) = std::pow(0.5, std::abs(static_cast<double>(j) - static_cast<double>(k)));
  if (!cholesky_inplace(sigma)) throw ComputeError("gen_dgp1: covariance not SPD");

  Rng rng(seed);
  Dataset ds;
  ds.x = Matrix(n, p);
  ds.y.resize(n);
  ds.d.resize(n);
  GroundTruth truth;
  truth.m0.resize(n);
  truth.ate = theta0;
  std::vector<double> z(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) z[j] = rng.normal();
    double index = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      double xij = 0.0;
      for (std::size_t k = 0; k <= j; ++k) xij += sigma(j, k) * z[k];
      ds.x(i, j) = xij;
      index += xij * coef.beta[j];
    }
    truth.m0[i] = expit(coef.c_d * index);
    const double di = rng.bernoulli(truth.m0[i]) ? 1.0 : 0.0;
    ds.d[i] = di;
    ds.y[i] = theta0 * di + coef.c_y * di * index + rng.normal();
  }
  return {std::move(ds), std::move(truth)};
}

// ---------------------------------------------------------------------------
// DGP 2: three standard normal covariates, overlap controlled by omega
// ---------------------------------------------------------------------------

/// Propensities live in (omega/2, 1 - omega/2): a uniform floor of omega/2 on
/// either side mixed with a steep logistic in the severity index. Outcome
/// noise has standard deviation 2, sized so that confidence intervals at
/// n = 2000 land in the reference range.
inline std::pair<Dataset, GroundTruth> gen_dgp2(std::size_t n, double overlap, double theta0,
                                                std::uint64_t seed) {
  if (n < 1) throw ValidationError("gen_dgp2: n must be >= 1");
  if (!(overlap > 0.0 && overlap < 1.0))
    throw ValidationError("gen_dgp2: overlap must lie in (0,1)");
  Rng rng(seed);
  Dataset ds;
  ds.x = Matrix(n, 3);
  ds.y.resize(n);
  ds.d.resize(n);
  GroundTruth truth;
  truth.m0.resize(n);
  truth.ate = theta0;
  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = rng.normal(), x2 = rng.normal(), x3 = rng.normal();
    ds.x(i, 0) = x1;
    ds.x(i, 1) = x2;
    ds.x(i, 2) = x3;
    const double severity = (x1 + x2 + x3) * inv_sqrt3;
    truth.m0[i] = overlap / 2.0 + (1.0 - overlap) * expit(4.0 * severity);
    const double di = rng.bernoulli(truth.m0[i]) ? 1.0 : 0.0;
    ds.d[i] = di;
    ds.y[i] = theta0 * di + x1 + 0.5 * x2 + 0.25 * x3 + 2.0 * rng.normal();
  }
  return {std::move(ds), std::move(truth)};
}

// ---------------------------------------------------------------------------
// DGP 3: uniform covariates on [-1,1]^4, binary outcome (setting A)
// ---------------------------------------------------------------------------

inline double dgp3_propensity(const double* x) {
  return expit(-0.25 - x[0] + 0.5 * x[1] - x[2] + 0.5 * x[3]);
}

/// Setting A outcome mean: shared nonlinear baseline plus a symmetric
/// treatment shift.
inline double dgp3_outcome_mean(const double* x, double d) {
  return expit(0.5 * (2.0 * d - 1.0) * (1.0 + 0.5 * x[0]) + x[0] * x[1] +
               0.5 * std::cos(kPi * x[2]) - 0.5 * x[3]);
}

/// Monte Carlo average of mu(x,1) - mu(x,0) over Unif[-1,1]^4.
inline double dgp3_true_ate_mc(std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  double acc = 0.0;
  double x[4];
  for (std::size_t i = 0; i < draws; ++i) {
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    acc += dgp3_outcome_mean(x, 1.0) - dgp3_outcome_mean(x, 0.0);
  }
  return acc / static_cast<double>(draws);
}

/// Frozen value of dgp3_true_ate_mc(10'000'000, kDgp3AteSeed); agrees with
/// tensor-product Gauss-Legendre quadrature to ~1e-5.
inline constexpr double kDgp3TrueAte = 0.22773979578692996;
inline constexpr std::uint64_t kDgp3AteSeed = 20240501;

inline std::pair<Dataset, GroundTruth> gen_dgp3(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("gen_dgp3: n must be >= 1");
  Rng rng(seed);
  Dataset ds;
  ds.x = Matrix(n, 4);
  ds.y.resize(n);
  ds.d.resize(n);
  GroundTruth truth;
  truth.m0.resize(n);
  truth.ate = kDgp3TrueAte;
  for (std::size_t i = 0; i < n; ++i) {
    double x[4];
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (std::size_t j = 0; j < 4; ++j) ds.x(i, j) = x[j];
    truth.m0[i] = dgp3_propensity(x);
    const double di = rng.bernoulli(truth.m0[i]) ? 1.0 : 0.0;
    ds.d[i] = di;
    ds.y[i] = rng.bernoulli(dgp3_outcome_mean(x, di)) ? 1.0 : 0.0;
  }
  return {std::move(ds), std::move(truth)};
}

// ---------------------------------------------------------------------------
// DGP 4: unbalanced treatment on [0,1]^20
// ---------------------------------------------------------------------------

/// Beta(2,4) CDF via the closed-form polynomial of the regularized
/// incomplete beta for integer parameters.
inline double beta24_cdf(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double omt = 1.0 - t;
  return 1.0 - omt * omt * omt * omt * (1.0 + 4.0 * t);
}

inline double dgp4_baseline(const double* x) {
  return std::sin(kPi * x[0] * x[1]) + 2.0 * (x[2] - 0.5) * (x[2] - 0.5) + x[3] + 0.5 * x[4];
}

inline std::pair<Dataset, GroundTruth> gen_dgp4(std::size_t n, double alpha,
                                                std::uint64_t seed) {
  if (n < 1) throw ValidationError("gen_dgp4: n must be >= 1");
  if (!(alpha > 0.0 && alpha <= 0.5))
    throw ValidationError("gen_dgp4: alpha must lie in (0, 0.5], else propensities exceed 1");
  constexpr std::size_t p = 20;
  Rng rng(seed);
  Dataset ds;
  ds.x = Matrix(n, p);
  ds.y.resize(n);
  ds.d.resize(n);
  GroundTruth truth;
  truth.m0.resize(n);
  truth.ate = 1.0; // E[x1 + x2]
  for (std::size_t i = 0; i < n; ++i) {
    double x[p];
    for (double& v : x) v = rng.uniform();
    for (std::size_t j = 0; j < p; ++j) ds.x(i, j) = x[j];
    truth.m0[i] = alpha * (1.0 + beta24_cdf(std::min(x[0], x[1])));
    const double di = rng.bernoulli(truth.m0[i]) ? 1.0 : 0.0;
    ds.d[i] = di;
    ds.y[i] = dgp4_baseline(x) + (di - 0.5) * (x[0] + x[1]) + rng.normal();
  }
  return {std::move(ds), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Named generator configuration
// ---------------------------------------------------------------------------

/// Serializable description of one generator instance. dgp2 forces p = 3,
/// dgp3 p = 4 and dgp4 p = 20.
struct DgpSpec {
  DgpName name = DgpName::dgp1;
  std::size_t n = 2000;
  std::size_t p = 20;
  std::map<std::string, double> params;

  double get(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }

  void validate() const {
    if (n < 1) throw ValidationError("DgpSpec: n must be >= 1");
    switch (name) {
      case DgpName::dgp1: {
        if (p < 1) throw ValidationError("DgpSpec: p must be >= 1");
        const double r2d = get("r2_d", 0.5), r2y = get("r2_y", 0.5);
        if (!(r2d > 0.0 && r2d < 1.0) || !(r2y > 0.0 && r2y < 1.0))
          throw ValidationError("DgpSpec: dgp1 r2_d/r2_y outside (0,1)");
        break;
      }
      case DgpName::dgp2: {
        if (p != 3) throw ValidationError("DgpSpec: dgp2 forces p = 3");
        const double omega = get("overlap", 0.5);
        if (!(omega > 0.0 && omega < 1.0))
          throw ValidationError("DgpSpec: dgp2 overlap outside (0,1)");
        break;
      }
      case DgpName::dgp3:
        if (p != 4) throw ValidationError("DgpSpec: dgp3 forces p = 4");
        break;
      case DgpName::dgp4: {
        if (p != 20) throw ValidationError("DgpSpec: dgp4 forces p = 20");
        const double a = get("alpha", 0.1);
        if (!(a > 0.0 && a <= 0.5))
          throw ValidationError("DgpSpec: dgp4 alpha outside (0, 0.5]");
        break;
      }
    }
  }

  static DgpSpec dgp1(std::size_t n, std::size_t p, double r2_d = 0.5, double r2_y = 0.5,
                      double theta0 = 0.5) {
    DgpSpec s;
    s.name = DgpName::dgp1;
    s.n = n;
    s.p = p;
    s.params = {{"r2_d", r2_d}, {"r2_y", r2_y}, {"theta0", theta0}};
    return s;
  }
  static DgpSpec dgp2(std::size_t n, double overlap = 0.5, double theta0 = 1.0) {
    DgpSpec s;
    s.name = DgpName::dgp2;
    s.n = n;
    s.p = 3;
    s.params = {{"overlap", overlap}, {"theta0", theta0}};
    return s;
  }
  static DgpSpec dgp3(std::size_t n) {
    DgpSpec s;
    s.name = DgpName::dgp3;
    s.n = n;
    s.p = 4;
    return s;
  }
  static DgpSpec dgp4(std::size_t n, double alpha = 0.1) {
    DgpSpec s;
    s.name = DgpName::dgp4;
    s.n = n;
    s.p = 20;
    s.params = {{"alpha", alpha}};
    return s;
  }
};

inline std::pair<Dataset, GroundTruth> generate(const DgpSpec& spec, std::uint64_t seed) {
  spec.validate();
  switch (spec.name) {
    case DgpName::dgp1:
      return gen_dgp1(spec.n, spec.p, spec.get("r2_d", 0.5), spec.get("r2_y", 0.5),
                      spec.get("theta0", 0.5), seed);
    case DgpName::dgp2:
      return gen_dgp2(spec.n, spec.get("overlap", 0.5), spec.get("theta0", 1.0), seed);
    case DgpName::dgp3:
      return gen_dgp3(spec.n, seed);
    case DgpName::dgp4:
      return gen_dgp4(spec.n, spec.get("alpha", 0.1), seed);
  }
  throw ValidationError("generate: unknown dgp");
}

} // namespace caldml
