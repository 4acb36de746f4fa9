#pragma once

// Exact occupancy tails and Good-Turing bias for rank-2 chains.
//
// Removing column x from P = R G S gives P~x = R G S~x, so every avoidance
// probability reduces to powers of the 2x2 matrix T_x = S~x R G:
//
//   Pr(X_2..X_m != x | X_1 = x)  = [1, g v_x] T_x^{m-2} [1 - pi_x, -u_x]'
//   Pr(F_x = 0)                  = [1 - pi_x, -g pi_x v_x] T_x^{n-2} [1 - pi_x, -u_x]'
//
// and the bias is E[G_0 - M_0] = sum_x Pr(F_x = 1)/n - pi_x Pr(F_x = 0).

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gtmarkov/decomposition.hpp"
#include "gtmarkov/error.hpp"
#include "gtmarkov/two_by_two.hpp"

namespace gtm {

/// Below this eigenvalue gap the eigen-division closed forms are never used.
inline constexpr double kDegenerateDelta = 1e-8;

struct PerStateSpectral {
  std::size_t x = 0;
  double pi_x = 0.0, v_x = 0.0, u_x = 0.0, w_x = 0.0;
  double s_x = 0.0;      // T11 - T22
  double delta_x = 0.0;  // lambda1 - lambda2 >= 0
  double lam1 = 0.0, lam2 = 0.0;
};

struct OccupancyTail {
  double p0 = 0.0;  // Pr(F_x = 0)
  double p1 = 0.0;  // Pr(F_x = 1)
};

struct StateContribution {
  std::size_t x = 0;
  double pi_x = 0.0;
  double gamma_x = 0.0;
  double p0 = 0.0, p1 = 0.0;
  double contribution = 0.0;  // p1 / n - pi_x p0
};

struct BiasReport {
  std::uint64_t n = 0;
  double exact_bias = 0.0;
  std::vector<StateContribution> per_state;
};

/// T_x = S~x R G. Diagonalizable (and iid): [[1-pi, -g pi v], [-u, g(1 - vu)]];
/// non-diagonalizable: [[1-pi, -pi v], [-u, -vu]].
inline TwoByTwo srd_matrix(const Rank2Decomposition& d, std::size_t x) {
  const double p = d.pi[x], v = d.v[x], u = d.u[x], w = v * u;
  if (d.kind == Rank2Kind::NonDiagonalizable) return {1.0 - p, -p * v, -u, -w};
  const double g = d.lambda2;
  return {1.0 - p, -g * p * v, -u, g * (1.0 - w)};
}

inline PerStateSpectral per_state_spectral(const Rank2Decomposition& d, std::size_t x) {
  const TwoByTwo t = srd_matrix(d, x);
  const auto e = real_eigen(t);
  PerStateSpectral ps;
  ps.x = x;
  ps.pi_x = d.pi[x];
  ps.v_x = d.v[x];
  ps.u_x = d.u[x];
  ps.w_x = ps.v_x * ps.u_x;
  ps.s_x = t.a11 - t.a22;
  ps.delta_x = e.delta;
  ps.lam1 = e.lambda1;
  ps.lam2 = e.lambda2;
  return ps;
}

inline TwoByTwo srd_power(const TwoByTwo& m, std::uint64_t l) { return power(m, l); }

/// Case-by-case closed form of T_x^l for diagonalizable chains.
inline TwoByTwo srd_power_closed_form(const Rank2Decomposition& d, std::size_t x, std::uint64_t l) {
  require(d.diagonalizable(), "closed-form T_x^l is only defined for diagonalizable chains");
  const double p = d.pi[x], pb = 1.0 - p, v = d.v[x], u = d.u[x];
  const double beta = d.beta(), bb = d.lambda2;
  const double L = static_cast<double>(l);
  const double pbl = std::pow(pb, L), bbl = std::pow(bb, L);
  const TwoByTwo D{pbl, 0.0, 0.0, bbl};
  if (v == 0.0 && u == 0.0) return D;
  if (v == 0.0) {
    if (std::abs(p - beta) <= 1e-12) return {pbl, 0.0, l == 0 ? 0.0 : -L * u * std::pow(pb, L - 1.0), pbl};
    const double c = u / (p - beta);
    return TwoByTwo{1.0, 0.0, c, 1.0} * D * TwoByTwo{1.0, 0.0, -c, 1.0};
  }
  if (u == 0.0) {
    if (std::abs(p - beta) <= 1e-12) return {pbl, -L * p * v * pbl, 0.0, pbl};
    const double c = bb * p * v / (p - beta);
    return TwoByTwo{1.0, -c, 0.0, 1.0} * D * TwoByTwo{1.0, c, 0.0, 1.0};
  }
  const auto ps = per_state_spectral(d, x);
  require(ps.delta_x > 0.0, "closed-form T_x^l needs distinct eigenvalues");
  const double q = bb * p * v, s = ps.s_x, dl = ps.delta_x;
  const TwoByTwo V{1.0, 1.0, -(dl - s) / (2.0 * q), (dl + s) / (2.0 * q)};
  const TwoByTwo Vinv{(dl + s) / (2.0 * dl), -q / dl, (dl - s) / (2.0 * dl), q / dl};
  return V * TwoByTwo{std::pow(ps.lam1, L), 0.0, 0.0, std::pow(ps.lam2, L)} * Vinv;
}

namespace detail {

inline std::array<double, 2> start_row(const Rank2Decomposition& d, std::size_t x) {
  return {1.0, d.gain() * d.v[x]};
}
inline std::array<double, 2> end_col(const Rank2Decomposition& d, std::size_t x) {
  return {1.0 - d.pi[x], -d.u[x]};
}
/// pi-weighted average of start rows over y != x, times (1 - pi_x).
inline std::array<double, 2> outside_row(const Rank2Decomposition& d, std::size_t x) {
  return {1.0 - d.pi[x], -d.gain() * d.pi[x] * d.v[x]};
}

/// h(m) = Pr(X_2..X_m != x | X_1 = x) for m = 1..n, by repeated multiplication.
inline std::vector<double> avoidance_sequence(const Rank2Decomposition& d, std::size_t x, std::uint64_t n) {
  std::vector<double> h(n + 1, 0.0);
  if (n >= 1) h[1] = 1.0;
  const TwoByTwo t = srd_matrix(d, x);
  const auto a = start_row(d, x);
  auto col = end_col(d, x);
  for (std::uint64_t m = 2; m <= n; ++m) {
    h[m] = a[0] * col[0] + a[1] * col[1];
    col = t.apply(col);
  }
  return h;
}

inline void check_state(const Rank2Decomposition& d, std::size_t x) {
  require(x < d.state_count(), "state " + std::to_string(x) + " out of range");
}

}  // namespace detail

/// Pr(F_x(X^n without X_m) = 0 | X_m != x); the same for every m.
inline double prob_no_visit_given_not_x(const Rank2Decomposition& d, std::size_t x, std::uint64_t n) {
  detail::check_state(d, x);
  require(n >= 1, "n must be positive");
  const double pb = 1.0 - d.pi[x];
  if (pb <= 0.0) throw InvalidArgument("state " + std::to_string(x) + " carries all stationary mass");
  if (n == 1) return 1.0;
  auto row = detail::outside_row(d, x);
  row = {row[0] / pb, row[1] / pb};
  return bilinear(row, srd_power(srd_matrix(d, x), n - 2), detail::end_col(d, x));
}

/// Pr(X_2..X_m != x | X_1 = x), m >= 1.
inline double prob_avoid_after_visit(const Rank2Decomposition& d, std::size_t x, std::uint64_t m) {
  detail::check_state(d, x);
  require(m >= 1, "m must be positive");
  if (m == 1) return 1.0;
  return bilinear(detail::start_row(d, x), srd_power(srd_matrix(d, x), m - 2), detail::end_col(d, x));
}

/// Pr(F_x(X^n without X_m) = 0 | X_m = x), 1 <= m <= n.
inline double prob_no_visit_given_x(const Rank2Decomposition& d, std::size_t x, std::uint64_t n,
                                    std::uint64_t m) {
  detail::check_state(d, x);
  require(n >= 1, "n must be positive");
  require(m >= 1 && m <= n, "m must lie in [1, n]");
  if (n == 1) return 1.0;
  if (m == 1 || m == n) return prob_avoid_after_visit(d, x, n);
  return prob_avoid_after_visit(d, x, m) * prob_avoid_after_visit(d, x, n - m + 1);
}

/// Gamma_x from its definition, n Gamma_x = sum_m Pr(.|X_m = x) - Pr(.|X_m != x), in O(n).
inline double gamma_x_averaged(const Rank2Decomposition& d, std::size_t x, std::uint64_t n) {
  detail::check_state(d, x);
  require(n >= 2, "gamma_x needs n >= 2");
  if (d.pi[x] == 0.0 || d.pi[x] == 1.0) return 0.0;
  const auto h = detail::avoidance_sequence(d, x, n);
  long double visits = 2.0L * h[n];
  for (std::uint64_t m = 2; m + 1 <= n; ++m) visits += static_cast<long double>(h[m]) * h[n - m + 1];
  const double not_x = prob_no_visit_given_not_x(d, x, n);
  return static_cast<double>((visits - static_cast<long double>(n) * not_x) / static_cast<long double>(n));
}

/// sum_{j=0}^{k} T^j (x) T^{k-j} as the top-right block of [[T(x)I, I], [0, I(x)T]]^{k+1}.
inline Eigen::Matrix4d kron_convolution_power(const TwoByTwo& t, std::uint64_t k) {
  Eigen::Matrix2d T;
  T << t.a11, t.a12, t.a21, t.a22;
  const Eigen::Matrix2d I2 = Eigen::Matrix2d::Identity();
  Eigen::Matrix<double, 8, 8> M = Eigen::Matrix<double, 8, 8>::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      M.block<2, 2>(2 * i, 2 * j) = T(i, j) * I2;  // T (x) I
      M.block<2, 2>(4 + 2 * i, 4 + 2 * j) = I2(i, j) * T;  // I (x) T
    }
  M.block<4, 4>(0, 4).setIdentity();
  Eigen::Matrix<double, 8, 8> out = Eigen::Matrix<double, 8, 8>::Identity();
  for (std::uint64_t e = k + 1; e > 0; e >>= 1U) {
    if (e & 1U) out = out * M;
    M = M * M;
  }
  return out.block<4, 4>(0, 4);
}

/// sum_{m=2}^{n-1} h(m) h(n-m+1), n >= 3, without eigenvalues.
inline double avoidance_convolution(const Rank2Decomposition& d, std::size_t x, std::uint64_t n) {
  const auto a = detail::start_row(d, x), b = detail::end_col(d, x);
  const Eigen::Vector4d aa(a[0] * a[0], a[0] * a[1], a[1] * a[0], a[1] * a[1]);
  const Eigen::Vector4d bb(b[0] * b[0], b[0] * b[1], b[1] * b[0], b[1] * b[1]);
  return aa.dot(kron_convolution_power(srd_matrix(d, x), n - 3) * bb);
}

/// O(log n) route through matrix powers only; used when the eigen closed forms are ill-conditioned.
inline OccupancyTail occupancy_tail_matrix_power(const Rank2Decomposition& d, std::size_t x, std::uint64_t n) {
  require(n >= 2, "matrix-power route needs n >= 2");
  const TwoByTwo tp = srd_power(srd_matrix(d, x), n - 2);
  const auto b = detail::end_col(d, x);
  OccupancyTail t;
  t.p0 = bilinear(detail::outside_row(d, x), tp, b);
  double visits = 2.0 * bilinear(detail::start_row(d, x), tp, b);
  if (n >= 3) visits += avoidance_convolution(d, x, n);
  t.p1 = d.pi[x] * visits;
  return t;
}

inline double gamma_x_matrix_power(const Rank2Decomposition& d, std::size_t x, std::uint64_t n) {
  require(n >= 3, "gamma_x needs n >= 3");
  if (d.pi[x] == 0.0 || d.pi[x] == 1.0) return 0.0;
  const auto t = occupancy_tail_matrix_power(d, x, n);
  const double N = static_cast<double>(n);
  return (t.p1 / d.pi[x] - N * t.p0 / (1.0 - d.pi[x])) / N;
}

/// The eigen closed forms divide by Delta^2 and cancel terms of size n rho^n / Delta^2
/// (rho = spectral radius of T_x); use them only while that rounding stays below 1e-13.
inline bool closed_form_well_conditioned(const PerStateSpectral& ps, std::uint64_t n) {
  if (ps.delta_x < kDegenerateDelta) return false;
  const double rho = std::fmax(std::abs(ps.lam1), std::abs(ps.lam2));
  const double N = static_cast<double>(n);
  const double growth = rho >= 1.0 ? 1.0 : std::pow(rho, std::fmax(N - 3.0, 0.0));
  return 2.3e-16 * (N + 1.0) * growth / (ps.delta_x * ps.delta_x) <= 1e-13;
}

/// Gamma_x: zero when P_xx = pi_x, the eigenvalue closed form otherwise, and the
/// matrix-power route when the two eigenvalues nearly coincide.
inline double gamma_x(const Rank2Decomposition& d, std::size_t x, std::uint64_t n) {
  detail::check_state(d, x);
  require(n >= 3, "gamma_x needs n >= 3");
  if (d.pi[x] == 0.0) return 0.0;
  if (!d.off_diagonal_state(x)) return 0.0;
  const auto ps = per_state_spectral(d, x);
  if (!closed_form_well_conditioned(ps, n)) return gamma_x_matrix_power(d, x, n);

  const double l1 = ps.lam1, l2 = ps.lam2, dl = ps.delta_x, w = ps.w_x;
  const double pb = 1.0 - ps.pi_x, N = static_cast<double>(n);
  const double sum_pow = std::pow(l1, N - 1.0) + std::pow(l2, N - 1.0);
  // (l1^{n-1} - l2^{n-1}) / Delta and (l1^{n-2} - l2^{n-2}) / Delta
  const double h1 = homogeneous_power_sum(l1, l2, dl, n - 2);
  const double h2 = homogeneous_power_sum(l1, l2, dl, n - 3);
  if (d.kind == Rank2Kind::NonDiagonalizable) {
    return w * (-h1 / pb - sum_pow * (1.0 - 2.0 / N) / (dl * dl) + (2.0 / N) * l1 * l2 * h2 / (dl * dl));
  }
  const double beta = d.beta(), bb = d.lambda2;
  return bb * w *
         (-h1 / pb - sum_pow * (1.0 - 2.0 / N) * beta / (dl * dl) + (2.0 / N) * beta / (dl * dl) * l1 * l2 * h2);
}

namespace detail {

/// Eigen closed form, diagonalizable chains: Pr(F_x = 0) from the lambda^n expansion and
/// the m-sum of lambda-power products as a geometric series.
inline OccupancyTail tail_closed_form_diag(const Rank2Decomposition& d, const PerStateSpectral& ps,
                                           std::uint64_t n) {
  const double l1 = ps.lam1, l2 = ps.lam2, dl = ps.delta_x, s = ps.s_x;
  const double N = static_cast<double>(n);
  const double gw = d.lambda2 * ps.w_x, beta = d.beta();
  OccupancyTail t;
  t.p0 = 0.5 * (std::pow(l1, N) * (1.0 + s / dl) + std::pow(l2, N) * (1.0 - s / dl));
  const double c1 = (s + dl) / (2.0 * dl) - gw / dl;
  const double c2 = (dl - s) / (2.0 * dl) + gw / dl;
  const double hn = c1 * std::pow(l1, N - 1.0) + c2 * std::pow(l2, N - 1.0);
  long double visits = 2.0L * hn;
  if (n >= 3) {
    visits += (N - 2.0) * (c1 * c1 * std::pow(l1, N - 1.0) + c2 * c2 * std::pow(l2, N - 1.0));
    visits += beta * gw / (dl * dl) * 2.0 * l1 * l2 * homogeneous_power_sum(l1, l2, dl, n - 3);
  }
  t.p1 = ps.pi_x * static_cast<double>(visits);
  return t;
}

}  // namespace detail

/// Same quantities through the spectral projectors of T_x; valid for any chain kind with
/// distinct eigenvalues. Used for non-diagonalizable chains and as a cross-check.
inline OccupancyTail occupancy_tail_projector(const Rank2Decomposition& d, std::size_t x, std::uint64_t n) {
  require(n >= 2, "projector form needs n >= 2");
  const TwoByTwo t = srd_matrix(d, x);
  const auto e = real_eigen(t);
  require(e.delta > 0.0, "projector form needs distinct eigenvalues");
  const TwoByTwo I = TwoByTwo::identity();
  const TwoByTwo E1 = (1.0 / e.delta) * (t - e.lambda2 * I);
  const TwoByTwo E2 = (1.0 / e.delta) * (e.lambda1 * I - t);
  const auto a = detail::start_row(d, x), b = detail::end_col(d, x), o = detail::outside_row(d, x);
  const double f1 = bilinear(a, E1, b), f2 = bilinear(a, E2, b);
  const double g1 = bilinear(o, E1, b), g2 = bilinear(o, E2, b);
  const double N = static_cast<double>(n);
  OccupancyTail out;
  out.p0 = g1 * std::pow(e.lambda1, N - 2.0) + g2 * std::pow(e.lambda2, N - 2.0);
  const double hn = f1 * std::pow(e.lambda1, N - 2.0) + f2 * std::pow(e.lambda2, N - 2.0);
  long double visits = 2.0L * hn;
  if (n >= 3) {
    visits += (N - 2.0) * (f1 * f1 * std::pow(e.lambda1, N - 3.0) + f2 * f2 * std::pow(e.lambda2, N - 3.0));
    visits += 2.0 * f1 * f2 * homogeneous_power_sum(e.lambda1, e.lambda2, e.delta, n - 3);
  }
  out.p1 = d.pi[x] * static_cast<double>(visits);
  return out;
}

/// O(n) matrix-power route; no eigen division.
inline OccupancyTail occupancy_tail_iterative(const Rank2Decomposition& d, std::size_t x, std::uint64_t n) {
  require(n >= 1, "n must be positive");
  const double p = d.pi[x];
  if (n == 1) return {1.0 - p, p};
  const auto h = detail::avoidance_sequence(d, x, n);
  long double visits = 2.0L * h[n];
  for (std::uint64_t m = 2; m + 1 <= n; ++m) visits += static_cast<long double>(h[m]) * h[n - m + 1];
  OccupancyTail t;
  t.p0 = bilinear(detail::outside_row(d, x), srd_power(srd_matrix(d, x), n - 2), detail::end_col(d, x));
  t.p1 = p * static_cast<double>(visits);
  return t;
}

/// Pr(F_x = 0) and Pr(F_x = 1) in closed form.
inline OccupancyTail occupancy_tail(const Rank2Decomposition& d, std::size_t x, std::uint64_t n) {
  detail::check_state(d, x);
  require(n >= 1, "n must be positive");
  const double p = d.pi[x], pb = 1.0 - p, N = static_cast<double>(n);
  if (p == 0.0) return {1.0, 0.0};
  if (pb <= 0.0) return {0.0, n == 1 ? 1.0 : 0.0};
  if (n == 1) return {pb, p};
  if (!d.off_diagonal_state(x)) return {std::pow(pb, N), N * p * std::pow(pb, N - 1.0)};
  const auto ps = per_state_spectral(d, x);
  if (!closed_form_well_conditioned(ps, n)) return occupancy_tail_matrix_power(d, x, n);
  if (d.kind == Rank2Kind::NonDiagonalizable) return occupancy_tail_projector(d, x, n);
  return detail::tail_closed_form_diag(d, ps, n);
}

inline void require_exact_bias_preconditions(const Rank2Decomposition& d) {
  if (!d.unique_stationary || d.lambda2 >= 1.0 - 1e-12)
    throw ReducibleChain("exact bias needs an irreducible chain; consistent estimation is not possible here");
}

/// Exact E[G_0 - M_0] with per-state breakdown. Work is per (pi_x, v_x, u_x) group.
inline BiasReport exact_bias(const Rank2Decomposition& d, std::uint64_t n) {
  require(n >= 3, "exact_bias needs n >= 3");
  require_exact_bias_preconditions(d);
  const double N = static_cast<double>(n);
  std::vector<StateContribution> group_values(d.groups.size());
  for (std::size_t g = 0; g < d.groups.size(); ++g) {
    const std::size_t x = d.groups[g].representative;
    const auto t = occupancy_tail(d, x, n);
    StateContribution& sc = group_values[g];
    sc.pi_x = d.pi[x];
    sc.p0 = t.p0;
    sc.p1 = t.p1;
    sc.gamma_x = gamma_x(d, x, n);
    sc.contribution = t.p1 / N - d.pi[x] * t.p0;
  }
  BiasReport rep;
  rep.n = n;
  rep.per_state.resize(d.state_count());
  long double total = 0;
  for (std::size_t x = 0; x < d.state_count(); ++x) {
    rep.per_state[x] = group_values[d.group_of[x]];
    rep.per_state[x].x = x;
    total += rep.per_state[x].contribution;
  }
  rep.exact_bias = static_cast<double>(total);
  return rep;
}

/// |bias| = (r/n)(1 - r/n)^{n/r - 1} for the period-r Kronecker chain with n states
/// and n samples. At r = n the exponent is 0 and 0^0 = 1, giving 1.
inline double exact_bias_periodic(double n, double r) {
  require(r >= 1.0, "r must be at least 1");
  require(r <= n, "periodic bias needs r <= n");
  const double f = r / n;
  return f * std::pow(1.0 - f, n / r - 1.0);
}

/// Exact bias of build_periodic_kronecker(n_states, r) for any sample count, by
/// counting visits per block over the r equally likely starting phases.
inline double periodic_bias_exact(std::size_t n_states, std::size_t r, std::uint64_t n_samples) {
  require(r >= 2 && n_states % r == 0, "periodic chain needs r >= 2 and r | n_states");
  require(n_samples >= 1, "n_samples must be positive");
  const double q = static_cast<double>(r) / static_cast<double>(n_states);  // per-visit hit chance
  const double N = static_cast<double>(n_samples);
  long double bias = 0;
  for (std::size_t b = 0; b < r; ++b) {
    long double p0 = 0, p1 = 0;
    for (std::size_t phase = 0; phase < r; ++phase) {
      // visits to block b when X_1 lies in block `phase`
      const std::uint64_t first = (b + r - phase) % r;  // 0-based index of first visit
      const std::uint64_t m = first < n_samples ? (n_samples - 1 - first) / r + 1 : 0;
      const double M = static_cast<double>(m);
      p0 += std::pow(1.0 - q, M);
      p1 += m == 0 ? 0.0 : M * q * std::pow(1.0 - q, M - 1.0);
    }
    p0 /= static_cast<long double>(r);
    p1 /= static_cast<long double>(r);
    const double states = static_cast<double>(n_states / r);
    bias += states * (p1 / N - p0 / static_cast<double>(n_states));
  }
  return static_cast<double>(bias);
}

}  // namespace gtm
