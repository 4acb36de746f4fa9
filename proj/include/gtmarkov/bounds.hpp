#pragma once

// Upper bounds on |E[G_0 - M_0]|:
//
//   general:   (delta/beta)(c1 + c2/(n beta)) + 2 max_{x: pi_x > delta, P_xx != pi_x} Pr(F_x <= 1) + 1/n
//   TV gap:    delta = 1/((1-theta) n^c) + 1/n, tails from a Hamming-Lipschitz concentration bound
//   L2(pi):    delta = 3 sqrt(ln n / (n (1-lambda_pi))) + 1/n, tails from a q-th moment bound
//
// The O(1/n) remainder is carried as the literal 1/n. Inapplicable settings produce a
// report with a reason (or throw Inapplicable in strict mode).

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gtmarkov/chain.hpp"
#include "gtmarkov/decomposition.hpp"
#include "gtmarkov/exact_bias.hpp"
#include "gtmarkov/parallel.hpp"
#include "gtmarkov/rate_fit.hpp"
#include "gtmarkov/spectral_params.hpp"

namespace gtm {

struct BoundConstants {
  double c1 = 42.0;
  double c2 = 162.0;
  double C_naor = 1.0;
  double c_exponent = 0.25;
  double q = 0.0;  // 0 selects 3 ln n at call time

  double q_for(std::uint64_t n) const { return q > 0.0 ? q : 3.0 * std::log(static_cast<double>(n)); }

  void validate() const {
    require(c1 > 0.0 && c2 > 0.0, "c1 and c2 must be positive");
    require(C_naor > 0.0, "C must be positive");
    require(c_exponent > 0.0 && c_exponent < 0.5, "c must lie in (0, 0.5)");
    require(q == 0.0 || q >= 2.0, "q must be at least 2");
  }
};

struct StatePartition {
  double delta = 0.0;
  std::vector<std::size_t> A;      // pi_x <= delta, P_xx != pi_x
  std::vector<std::size_t> A_bar;  // pi_x > delta, P_xx != pi_x
};

inline StatePartition partition_states(const Rank2Decomposition& d, double delta) {
  StatePartition p;
  p.delta = delta;
  for (std::size_t x = 0; x < d.state_count(); ++x) {
    if (!d.off_diagonal_state(x)) continue;
    (d.pi[x] <= delta ? p.A : p.A_bar).push_back(x);
  }
  return p;
}

struct BoundReport {
  std::string name;
  double delta = std::numeric_limits<double>::quiet_NaN();
  double low_mass_term = std::numeric_limits<double>::quiet_NaN();
  double tail_term = std::numeric_limits<double>::quiet_NaN();
  double residual_term = std::numeric_limits<double>::quiet_NaN();
  double total = std::numeric_limits<double>::quiet_NaN();
  bool applicable = false;
  std::string reason;
};

/// Pr(|F_x/n - pi_x| >= eps) <= 2 exp(-0.5 n (1-theta)^2 eps^2), clamped to 1.
inline double kontorovich_tail(double /*pi_x*/, std::uint64_t n, double theta, double epsilon) {
  if (!(theta < 1.0)) throw Inapplicable("TV-gap tail bound needs theta < 1 (rows with disjoint supports)");
  require(epsilon > 0.0, "epsilon must be positive");
  const double tb = 1.0 - theta;
  return std::fmin(1.0, 2.0 * std::exp(-0.5 * static_cast<double>(n) * tb * tb * epsilon * epsilon));
}

/// Pr(|F_x/n - pi_x| >= eps) <= C (q/((1-lambda_pi) n))^{q/2} pi_x eps^{-q}, clamped to 1.
inline double naor_tail(double pi_x, std::uint64_t n, double lambda_pi, double epsilon, double q, double C) {
  if (!(lambda_pi < 1.0)) throw Inapplicable("L2(pi) tail bound needs lambda_pi < 1");
  require(q >= 2.0, "q must be at least 2");
  require(epsilon > 0.0, "epsilon must be positive");
  const double base = q / ((1.0 - lambda_pi) * static_cast<double>(n));
  // in logs so large q does not overflow before the clamp
  const double log_val = std::log(C) + 0.5 * q * std::log(base) + std::log(pi_x) - q * std::log(epsilon);
  return log_val >= 0.0 ? 1.0 : std::exp(log_val);
}

/// Upper bound on Pr(F_x <= 1) for a given state and sample count.
using TailFunction = std::function<double(std::size_t x, std::uint64_t n)>;

/// Exact Pr(F_x <= 1), the tightest admissible tail.
inline TailFunction exact_tail_function(const Rank2Decomposition& d) {
  return [&d](std::size_t x, std::uint64_t n) {
    const auto t = occupancy_tail(d, x, n);
    return t.p0 + t.p1;
  };
}

namespace detail {
inline double low_mass_term(double delta, double beta, std::uint64_t n, const BoundConstants& k) {
  const double N = static_cast<double>(n);
  return delta / beta * (k.c1 + k.c2 / (N * beta));
}

/// max of tail over A_bar, one evaluation per (pi, v, u) group.
inline double max_high_mass_tail(const Rank2Decomposition& d, double delta, std::uint64_t n,
                                 const TailFunction& tail) {
  double m = 0.0;
  for (const auto& g : d.groups) {
    const std::size_t x = g.representative;
    if (!d.off_diagonal_state(x) || d.pi[x] <= delta) continue;
    m = std::fmax(m, tail(x, n));
  }
  return m;
}

inline BoundReport finish(BoundReport r, bool strict) {
  r.total = r.low_mass_term + r.tail_term + r.residual_term;
  if (!r.applicable && strict) throw Inapplicable(r.name + ": " + r.reason);
  return r;
}
}  // namespace detail

inline BoundReport theorem1_bound(const Rank2Decomposition& d, const SpectralParams& params, std::uint64_t n,
                                  double delta, const TailFunction& tail, const BoundConstants& k = {}) {
  k.validate();
  require(n >= 2, "n must be at least 2");
  const double beta = params.beta;
  if (!(beta > 0.0)) throw ReducibleChain("spectral gap is 0; the bias bound is unbounded for reducible chains");
  const double N = static_cast<double>(n);
  require(delta > 1.0 / N, "delta must exceed 1/n");
  require(delta <= beta / 5.0 * (1.0 + 1e-12), "delta must not exceed beta/5");
  BoundReport r;
  r.name = "theorem1";
  r.delta = delta;
  r.low_mass_term = detail::low_mass_term(delta, beta, n, k);
  r.tail_term = 2.0 * detail::max_high_mass_tail(d, delta, n, tail);
  r.residual_term = 1.0 / N;
  r.applicable = true;
  return detail::finish(r, false);
}

inline BoundReport corollary1_bound(const Rank2Decomposition& /*d*/, const SpectralParams& params,
                                    std::uint64_t n, const BoundConstants& k = {}, bool strict = false) {
  k.validate();
  require(n >= 2, "n must be at least 2");
  const double N = static_cast<double>(n), c = k.c_exponent, beta = params.beta;
  BoundReport r;
  r.name = "corollary1";
  r.residual_term = 1.0 / N;
  if (!(params.theta < 1.0)) {
    r.reason = "theta = 1: two rows have disjoint supports";
    return detail::finish(r, strict);
  }
  if (!(beta > 0.0)) {
    r.reason = "spectral gap is 0 (reducible chain)";
    return detail::finish(r, strict);
  }
  r.delta = 1.0 / (params.theta_bar() * std::pow(N, c)) + 1.0 / N;
  r.low_mass_term = detail::low_mass_term(r.delta, beta, n, k);
  r.tail_term = 4.0 * std::exp(-0.5 * std::pow(N, 1.0 - 2.0 * c));
  const double beta0 = 5.0 * r.delta;
  r.applicable = beta >= beta0;
  if (!r.applicable)
    r.reason = "beta = " + std::to_string(beta) + " is below the required " + std::to_string(beta0);
  return detail::finish(r, strict);
}

/// Tail term is 2 C / n^{1.5} (the q = 3 ln n instantiation). With an explicit q, the
/// moment bound is evaluated per high-mass state at eps = pi_x - 1/n instead.
inline BoundReport corollary2_bound(const Rank2Decomposition& d, const SpectralParams& params, std::uint64_t n,
                                    const BoundConstants& k = {}, bool strict = false) {
  k.validate();
  require(n >= 2, "n must be at least 2");
  const double N = static_cast<double>(n), beta = params.beta;
  BoundReport r;
  r.name = "corollary2";
  r.residual_term = 1.0 / N;
  if (!(params.lambda_pi < 1.0)) {
    r.reason = "lambda_pi = " + std::to_string(params.lambda_pi) + " is not below 1";
    return detail::finish(r, strict);
  }
  if (!(beta > 0.0)) {
    r.reason = "spectral gap is 0 (reducible chain)";
    return detail::finish(r, strict);
  }
  r.delta = 3.0 * std::sqrt(std::log(N) / (N * params.lambda_pi_bar())) + 1.0 / N;
  r.low_mass_term = detail::low_mass_term(r.delta, beta, n, k);
  if (k.q > 0.0) {
    const TailFunction moment = [&](std::size_t x, std::uint64_t m) {
      return naor_tail(d.pi[x], m, params.lambda_pi, d.pi[x] - 1.0 / static_cast<double>(m), k.q, k.C_naor);
    };
    r.tail_term = 2.0 * detail::max_high_mass_tail(d, r.delta, n, moment);
  } else {
    r.tail_term = 2.0 * k.C_naor / std::pow(N, 1.5);
  }
  const double beta1 = 5.0 * r.delta;
  r.applicable = beta >= beta1;
  if (!r.applicable)
    r.reason = "beta = " + std::to_string(beta) + " is below the required " + std::to_string(beta1);
  return detail::finish(r, strict);
}

// ---------------------------------------------------------------------------
// Rate table over an n grid (K = n, K1 ~ n^kappa).

struct BoundRateRow {
  std::size_t n = 0, k1 = 0;
  SpectralParams params;
  BoundReport cor1, cor2;
  double exact = 0.0;
};

struct BoundRateTable {
  Family family = Family::P1;
  double kappa = 0.0;
  std::vector<BoundRateRow> rows;
  // slope of the total over applicable rows (needs 3 of them)
  std::optional<LogLogFit> cor1_total_fit, cor2_total_fit;
  // slope of the dominant low-mass term over every row where it is defined;
  // for the L2(pi) bound the sqrt(ln n) factor is divided out first
  std::optional<LogLogFit> cor1_dominant_fit, cor2_dominant_fit;
};

inline BoundRateTable bound_rate_table(Family family, double kappa, const std::vector<std::size_t>& n_grid,
                                       const BoundConstants& k = {}, unsigned threads = 1) {
  k.validate();
  require(!n_grid.empty(), "empty n grid");
  for (std::size_t i = 1; i < n_grid.size(); ++i) require(n_grid[i] > n_grid[i - 1], "n grid must increase");
  BoundRateTable t;
  t.family = family;
  t.kappa = kappa;
  t.rows.resize(n_grid.size());
  parallel_for(n_grid.size(), threads, [&](std::size_t i) {
    BoundRateRow& row = t.rows[i];
    row.n = n_grid[i];
    row.k1 = family_k1(row.n, kappa);
    const auto chain = build_connected_family(family, row.n, row.k1);
    const auto d = rank2_decompose(chain);
    row.params = spectral_params(chain, d);
    row.cor1 = corollary1_bound(d, row.params, row.n, k);
    row.cor2 = corollary2_bound(d, row.params, row.n, k);
    row.exact = exact_bias(d, row.n).exact_bias;
  });
  auto fit = [&](auto value) -> std::optional<LogLogFit> {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : t.rows) {
      const auto v = value(row);
      if (v && *v > 0.0 && std::isfinite(*v)) pts.emplace_back(static_cast<double>(row.n), *v);
    }
    if (pts.size() < 3) return std::nullopt;
    return rate_fit(pts);
  };
  using Opt = std::optional<double>;
  t.cor1_total_fit = fit([](const BoundRateRow& r) { return r.cor1.applicable ? Opt(r.cor1.total) : Opt(); });
  t.cor2_total_fit = fit([](const BoundRateRow& r) { return r.cor2.applicable ? Opt(r.cor2.total) : Opt(); });
  t.cor1_dominant_fit = fit([](const BoundRateRow& r) {
    return std::isnan(r.cor1.low_mass_term) ? Opt() : Opt(r.cor1.low_mass_term);
  });
  t.cor2_dominant_fit = fit([](const BoundRateRow& r) {
    if (std::isnan(r.cor2.low_mass_term)) return Opt();
    return Opt(r.cor2.low_mass_term / std::sqrt(std::log(static_cast<double>(r.n))));
  });
  return t;
}

}  // namespace gtm
