#pragma once

// Chain parameters that drive the bias bounds:
//   beta      spectral gap 1 - lambda_2
//   theta     largest total-variation distance between two rows
//   lambda_pi norm of P - 1 pi' as an operator on L2(pi)

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gtmarkov/chain.hpp"
#include "gtmarkov/decomposition.hpp"
#include "gtmarkov/rate_fit.hpp"

namespace gtm {

struct SpectralParams {
  double beta = 0.0;
  double theta = 0.0;
  double lambda_pi = 0.0;

  double theta_bar() const { return 1.0 - theta; }
  double lambda_pi_bar() const { return 1.0 - lambda_pi; }
};

inline double spectral_gap(const Rank2Decomposition& d) {
  double beta = 1.0 - d.lambda2;
  if (std::abs(beta) < 1e-12) beta = 0.0;
  if (std::abs(beta - 2.0) < 1e-12) beta = 2.0;
  return std::clamp(beta, 0.0, 2.0);
}

/// Max over pairs of distinct row classes; identical rows contribute 0 anyway.
inline double max_tv_gap(const RowClassChain& chain) {
  double theta = 0.0;
  const auto& cls = chain.row_classes();
  for (std::size_t a = 0; a < cls.size(); ++a)
    for (std::size_t b = a + 1; b < cls.size(); ++b) theta = std::max(theta, tv_distance(cls[a], cls[b]));
  return std::min(theta, 1.0);
}

/// Closed form from P - 1 pi' = g v u':  |g| * ||v||_pi * sqrt(sum_j u_j^2 / pi_j).
/// Returns +inf if some pi_j = 0 carries u_j != 0. Values within 1e-12 of 1 are reported as 1.
inline double weighted_norm_lambda_pi(const Rank2Decomposition& d) {
  if (d.iid()) return 0.0;
  long double vn = 0, un = 0;
  for (std::size_t x = 0; x < d.state_count(); ++x) {
    const double p = d.pi[x];
    if (p == 0.0) {
      if (d.u[x] != 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    vn += static_cast<long double>(p) * d.v[x] * d.v[x];
    un += static_cast<long double>(d.u[x]) * d.u[x] / p;
  }
  const double lam = std::abs(d.gain()) * std::sqrt(static_cast<double>(vn)) * std::sqrt(static_cast<double>(un));
  return std::abs(lam - 1.0) <= 1e-12 ? 1.0 : lam;
}

struct PowerIterationResult {
  double value = 0.0;
  int iterations = 0;
  double gap = 0.0;  // relative change at the last step
};

/// Power iteration on M* M in L2(pi) with M = P - 1 pi'. States with pi = 0 are dropped.
inline PowerIterationResult weighted_norm_power_iteration(const RowClassChain& chain, const Distribution& pi,
                                                          double rel_tol = 1e-12, int max_iter = 10000) {
  const std::size_t K = chain.state_count(), C = chain.class_count();
  require(pi.size() == K, "distribution length mismatch");
  std::vector<double> W(C, 0.0);
  for (std::size_t i = 0; i < K; ++i) W[chain.class_of(i)] += pi[i];

  std::vector<double> z(K, 0.0);
  for (std::size_t j = 0; j < K; ++j)
    if (pi[j] > 0.0) z[j] = std::cos(0.7 * static_cast<double>(j) + 0.3) + 0.25;
  auto normalize = [&](std::vector<double>& vec) {
    long double s = 0;
    for (std::size_t j = 0; j < K; ++j) s += static_cast<long double>(pi[j]) * vec[j] * vec[j];
    const double n = std::sqrt(static_cast<double>(s));
    if (n > 0.0)
      for (double& e : vec) e /= n;
    return n;
  };
  normalize(z);

  PowerIterationResult res;
  std::vector<double> y(C), next(K);
  double prev = -1.0;
  for (int it = 1; it <= max_iter; ++it) {
    const double piz = [&] {
      long double s = 0;
      for (std::size_t j = 0; j < K; ++j) s += static_cast<long double>(pi[j]) * z[j];
      return static_cast<double>(s);
    }();
    long double norm2 = 0, piy = 0;
    for (std::size_t c = 0; c < C; ++c) {
      y[c] = chain.row_class(c).dot(z) - piz;
      norm2 += static_cast<long double>(W[c]) * y[c] * y[c];
      piy += static_cast<long double>(W[c]) * y[c];
    }
    const double value = std::sqrt(static_cast<double>(norm2));
    res.iterations = it;
    res.value = value;
    if (value == 0.0) {
      res.gap = 0.0;
      return res;
    }
    res.gap = prev < 0.0 ? 1.0 : std::abs(value - prev) / value;
    if (prev >= 0.0 && res.gap <= rel_tol) return res;
    prev = value;
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t c = 0; c < C; ++c)
      if (W[c] != 0.0) chain.row_class(c).add_scaled_to(next, W[c] * y[c]);
    for (std::size_t j = 0; j < K; ++j)
      next[j] = pi[j] > 0.0 ? next[j] / pi[j] - static_cast<double>(piy) : 0.0;
    if (normalize(next) == 0.0) {
      res.gap = 0.0;
      return res;
    }
    z.swap(next);
  }
  throw NotConverged("lambda_pi power iteration did not converge; last relative gap " +
                     std::to_string(res.gap));
}

inline double weighted_norm_numeric(const RowClassChain& chain, const Distribution& pi,
                                    double rel_tol = 1e-12, int max_iter = 10000) {
  return weighted_norm_power_iteration(chain, pi, rel_tol, max_iter).value;
}

inline SpectralParams spectral_params(const RowClassChain& chain, const Rank2Decomposition& d) {
  return {spectral_gap(d), max_tv_gap(chain), weighted_norm_lambda_pi(d)};
}

// ---------------------------------------------------------------------------
// Scaling of beta, 1 - theta, 1 - lambda_pi with n for K = n, K1 ~ n^kappa.

struct ParameterFit {
  std::string name;
  std::vector<double> values;
  bool zero = false;  // identically zero over the grid
  std::optional<LogLogFit> fit;
};

struct DominantTermFit {
  Family family = Family::P1;
  double kappa = 0.0;
  std::vector<std::size_t> n_grid;
  std::vector<std::size_t> k1;
  ParameterFit beta, theta_bar, lambda_pi_bar;
};

namespace detail {
inline ParameterFit fit_parameter(std::string name, const std::vector<std::size_t>& grid,
                                  std::vector<double> values) {
  constexpr double kZero = 1e-12;
  ParameterFit pf{std::move(name), std::move(values), false, std::nullopt};
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (pf.values[i] > kZero) pts.emplace_back(static_cast<double>(grid[i]), pf.values[i]);
  if (pts.empty()) {
    pf.zero = true;
    return pf;
  }
  if (pts.size() != grid.size())
    throw InvalidArgument(pf.name + " vanishes on part of the grid only; no power law to fit");
  pf.fit = rate_fit(pts);
  return pf;
}
}  // namespace detail

inline DominantTermFit dominant_term_fit(Family family, double kappa, const std::vector<std::size_t>& n_grid) {
  require(family == Family::P1 || family == Family::P2 || family == Family::P3,
          "dominant_term_fit supports p1, p2, p3");
  require(n_grid.size() >= 3, "dominant_term_fit needs at least 3 grid points");
  DominantTermFit out;
  out.family = family;
  out.kappa = kappa;
  out.n_grid = n_grid;
  std::vector<double> beta, tbar, lbar;
  for (std::size_t n : n_grid) {
    const std::size_t k1 = family_k1(n, kappa);
    out.k1.push_back(k1);
    const auto chain = build_connected_family(family, n, k1);
    const auto d = rank2_decompose(chain);
    const auto p = spectral_params(chain, d);
    beta.push_back(p.beta);
    tbar.push_back(p.theta_bar());
    lbar.push_back(p.lambda_pi_bar());
  }
  out.beta = detail::fit_parameter("beta", n_grid, std::move(beta));
  out.theta_bar = detail::fit_parameter("theta_bar", n_grid, std::move(tbar));
  out.lambda_pi_bar = detail::fit_parameter("lambda_pi_bar", n_grid, std::move(lbar));
  return out;
}

}  // namespace gtm
