#pragma once

// Stationary distribution and the rank-2 spectral decomposition
//
//   P = 1 pi' + g v u'      (g = lambda_2 when diagonalizable, g = 1 otherwise)
//
// with pi.1 = 1, pi.v = 0, u.1 = 0 and u.v = 1 (diagonalizable) or 0 (not).
// Everything is computed on the row-class quotient, so cost is O(#classes * K).

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "gtmarkov/chain.hpp"
#include "gtmarkov/distribution.hpp"
#include "gtmarkov/error.hpp"

namespace gtm {

struct StationaryOptions {
  /// For chains without a unique stationary law, return the Cesaro limit of the
  /// state-uniform start instead of throwing.
  bool allow_reducible = false;
};

namespace detail {

/// Q(c, c') = mass that row class c puts on states of class c'.
inline Eigen::MatrixXd class_transition(const RowClassChain& chain) {
  const std::size_t C = chain.class_count();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(C, C);
  for (std::size_t c = 0; c < C; ++c)
    for (const auto& r : chain.row_class(c).runs())
      for (std::size_t j = r.start; j < r.end(); ++j) Q(c, chain.class_of(j)) += r.mass;
  return Q;
}

/// pi = sum_c w_c r_c
inline Distribution lift_class_weights(const RowClassChain& chain, const Eigen::VectorXd& w) {
  std::vector<double> pi(chain.state_count(), 0.0);
  for (std::size_t c = 0; c < chain.class_count(); ++c)
    chain.row_class(c).add_scaled_to(pi, w(c));
  for (double& p : pi)
    if (p < 0.0 && p > -1e-15) p = 0.0;
  return Distribution(std::move(pi));
}

inline double stationarity_residual(const RowClassChain& chain, const Distribution& pi) {
  const auto piP = chain.left_multiply(pi.probs);
  long double s = 0;
  for (std::size_t j = 0; j < pi.size(); ++j) s += std::abs(piP[j] - pi[j]);
  return static_cast<double>(s);
}

}  // namespace detail

/// True when the stationary law is unique (equivalently, the class quotient's is).
inline bool has_unique_stationary(const RowClassChain& chain) {
  const Eigen::MatrixXd Q = detail::class_transition(chain);
  const auto C = Q.rows();
  Eigen::MatrixXd A(C + 1, C);
  A.topRows(C) = Q.transpose() - Eigen::MatrixXd::Identity(C, C);
  A.row(C).setOnes();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  return s(C - 1) > 1e-10 * std::max(1.0, s(0));
}

/// pi P = pi, solved on the class quotient and lifted back to states.
inline Distribution stationary_distribution(const RowClassChain& chain, StationaryOptions opt = {}) {
  const Eigen::MatrixXd Q = detail::class_transition(chain);
  const auto C = Q.rows();
  Eigen::VectorXd w;
  if (has_unique_stationary(chain)) {
    Eigen::MatrixXd A(C + 1, C);
    A.topRows(C) = Q.transpose() - Eigen::MatrixXd::Identity(C, C);
    A.row(C).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(C + 1);
    rhs(C) = 1.0;
    w = A.colPivHouseholderQr().solve(rhs);
  } else {
    if (!opt.allow_reducible)
      throw ReducibleChain("chain '" + chain.label() + "' has no unique stationary distribution");
    // Cesaro average of Q^t, t < 2^48, by doubling: A_{2T} = A_T (I + Q^T) / 2.
    Eigen::MatrixXd avg = Eigen::MatrixXd::Identity(C, C);
    Eigen::MatrixXd pw = Q;
    for (int k = 0; k < 48; ++k) {
      avg = 0.5 * avg * (Eigen::MatrixXd::Identity(C, C) + pw);
      pw = pw * pw;
    }
    Eigen::RowVectorXd w0(C);
    for (Eigen::Index c = 0; c < C; ++c)
      w0(c) = static_cast<double>(chain.class_sizes()[c]) / static_cast<double>(chain.state_count());
    w = (w0 * avg).transpose();
  }
  for (Eigen::Index c = 0; c < C; ++c)
    if (w(c) < 0.0 && w(c) > -1e-14) w(c) = 0.0;
  w /= w.sum();
  Distribution pi = detail::lift_class_weights(chain, w);
  validate(pi, 1e-10);
  const double res = detail::stationarity_residual(chain, pi);
  if (res > 1e-10)
    throw Error("stationary distribution residual " + std::to_string(res) + " exceeds 1e-10");
  return pi;
}

/// Dense left-eigenvector solve; small-K cross-check for stationary_distribution.
inline Distribution stationary_distribution_dense(const RowClassChain& chain) {
  const Eigen::MatrixXd P = chain.dense(64);
  const auto K = P.rows();
  Eigen::MatrixXd A(K + 1, K);
  A.topRows(K) = P.transpose() - Eigen::MatrixXd::Identity(K, K);
  A.row(K).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K + 1);
  rhs(K) = 1.0;
  const Eigen::VectorXd pi = A.colPivHouseholderQr().solve(rhs);
  return Distribution(std::vector<double>(pi.data(), pi.data() + K));
}

enum class Rank2Kind { Iid, Diagonalizable, NonDiagonalizable };

inline std::string to_string(Rank2Kind k) {
  switch (k) {
    case Rank2Kind::Iid: return "iid";
    case Rank2Kind::Diagonalizable: return "diagonalizable";
    case Rank2Kind::NonDiagonalizable: return "non-diagonalizable";
  }
  return "?";
}

/// States sharing (pi_x, v_x, u_x); every per-state quantity depends only on these.
struct StateGroup {
  State representative = 0;
  std::size_t count = 0;
  double pi = 0.0, v = 0.0, u = 0.0;
};

struct Rank2Decomposition {
  Distribution pi;
  std::vector<double> u;
  std::vector<double> v;
  double lambda2 = 0.0;
  Rank2Kind kind = Rank2Kind::Iid;
  bool unique_stationary = true;
  std::vector<StateGroup> groups;
  std::vector<std::size_t> group_of;  // state -> index into groups

  std::size_t state_count() const { return pi.size(); }
  bool diagonalizable() const { return kind != Rank2Kind::NonDiagonalizable; }
  bool iid() const { return kind == Rank2Kind::Iid; }

  /// Coefficient g in P = 1 pi' + g v u'.
  double gain() const { return kind == Rank2Kind::NonDiagonalizable ? 1.0 : lambda2; }

  /// Spectral gap 1 - lambda_2 (the non-diagonalizable case has lambda_2 = 0).
  double beta() const { return 1.0 - lambda2; }

  double w(std::size_t x) const { return v[x] * u[x]; }

  /// P_xx != pi_x, i.e. g v_x u_x != 0.
  bool off_diagonal_state(std::size_t x) const { return gain() * w(x) != 0.0; }

  double reconstruct(std::size_t i, std::size_t j) const { return pi[j] + gain() * v[i] * u[j]; }
};

namespace detail {

inline void build_groups(Rank2Decomposition& d) {
  std::map<std::tuple<double, double, double>, std::size_t> index;
  d.group_of.assign(d.state_count(), 0);
  d.groups.clear();
  for (std::size_t x = 0; x < d.state_count(); ++x) {
    auto key = std::make_tuple(d.pi[x], d.v[x], d.u[x]);
    auto [it, fresh] = index.try_emplace(key, d.groups.size());
    if (fresh) d.groups.push_back({static_cast<State>(x), 0, d.pi[x], d.v[x], d.u[x]});
    ++d.groups[it->second].count;
    d.group_of[x] = it->second;
  }
}

inline void check_decomposition(const RowClassChain& chain, const Rank2Decomposition& d) {
  const std::size_t K = chain.state_count();
  long double pv = 0, u1 = 0, uv = 0;
  for (std::size_t x = 0; x < K; ++x) {
    pv += static_cast<long double>(d.pi[x]) * d.v[x];
    u1 += d.u[x];
    uv += static_cast<long double>(d.u[x]) * d.v[x];
  }
  auto fail = [&](const std::string& what) {
    throw Error("rank-2 decomposition of '" + chain.label() + "' violates " + what);
  };
  if (std::abs(static_cast<double>(pv)) > 1e-9) fail("pi.v = 0");
  if (std::abs(static_cast<double>(u1)) > 1e-9) fail("u.1 = 0");
  if (d.kind == Rank2Kind::Diagonalizable && std::abs(static_cast<double>(uv) - 1.0) > 1e-9)
    fail("u.v = 1");
  if (d.kind == Rank2Kind::NonDiagonalizable && std::abs(static_cast<double>(uv)) > 1e-9)
    fail("u.v = 0");
  // One representative row per class is enough: v is constant on classes.
  std::vector<char> seen(chain.class_count(), 0);
  for (std::size_t i = 0; i < K; ++i) {
    const State c = chain.class_of(i);
    if (seen[c]) continue;
    seen[c] = 1;
    const auto row = chain.row_class(c).dense(K);
    for (std::size_t j = 0; j < K; ++j) {
      const double rec = d.reconstruct(i, j);
      if (std::abs(rec - row[j]) > 1e-9) fail("reconstruction at (" + std::to_string(i) + "," +
                                              std::to_string(j) + ")");
      if (rec < -1e-9 || rec > 1.0 + 1e-9) fail("entry range [0,1]");
    }
  }
}

}  // namespace detail

/// Decompose with a given stationary law (needed for reducible demonstrations).
inline Rank2Decomposition rank2_decompose(const RowClassChain& chain, const Distribution& pi,
                                          bool unique_stationary = true) {
  const std::size_t K = chain.state_count();
  const std::size_t C = chain.class_count();
  require(pi.size() == K, "stationary distribution has wrong length");

  // Rows of M = P - 1 pi' are d_c = r_c - pi. Rank(P) <= 2 iff all d_c are collinear.
  std::vector<double> scratch(K);
  auto fill_d = [&](std::size_t c, std::vector<double>& out) {
    for (std::size_t j = 0; j < K; ++j) out[j] = -pi[j];
    chain.row_class(c).add_scaled_to(out, 1.0);
  };
  auto norm2 = [](const std::vector<double>& z) {
    long double s = 0;
    for (double e : z) s += static_cast<long double>(e) * e;
    return static_cast<double>(s);
  };

  std::vector<double> dn(C);
  long double frob_p = 0;
  std::size_t pivot = 0;
  for (std::size_t c = 0; c < C; ++c) {
    fill_d(c, scratch);
    dn[c] = std::sqrt(norm2(scratch));
    const double weighted = dn[c] * dn[c] * static_cast<double>(chain.class_sizes()[c]);
    if (weighted > dn[pivot] * dn[pivot] * static_cast<double>(chain.class_sizes()[pivot]))
      pivot = c;
    for (const auto& r : chain.row_class(c).runs())
      frob_p += static_cast<long double>(r.mass) * r.mass * r.length * chain.class_sizes()[c];
  }

  Rank2Decomposition d;
  d.pi = pi;
  d.unique_stationary = unique_stationary;
  d.u.assign(K, 0.0);
  d.v.assign(K, 0.0);

  if (dn[pivot] <= 1e-12) {
    d.kind = Rank2Kind::Iid;
    d.lambda2 = 0.0;
    detail::build_groups(d);
    detail::check_decomposition(chain, d);
    return d;
  }

  std::vector<double> b(K);
  fill_d(pivot, b);
  const double bb = dn[pivot] * dn[pivot];
  const double bmax = *std::max_element(b.begin(), b.end(), [](double x, double y) {
    return std::abs(x) < std::abs(y);
  });
  for (double& e : b)
    if (std::abs(e) <= 1e-10 * std::abs(bmax)) e = 0.0;

  std::vector<double> alpha(C, 0.0);
  long double resid2 = 0;
  for (std::size_t c = 0; c < C; ++c) {
    if (c == pivot) {
      alpha[c] = 1.0;
      continue;
    }
    if (dn[c] <= 1e-10 * dn[pivot]) continue;  // row equals pi up to rounding
    fill_d(c, scratch);
    long double dot = 0;
    for (std::size_t j = 0; j < K; ++j) dot += static_cast<long double>(scratch[j]) * b[j];
    alpha[c] = static_cast<double>(dot / bb);
    long double r2 = 0;
    for (std::size_t j = 0; j < K; ++j) {
      const double e = scratch[j] - alpha[c] * b[j];
      r2 += static_cast<long double>(e) * e;
    }
    resid2 += r2 * chain.class_sizes()[c];
  }
  const double resid = std::sqrt(static_cast<double>(resid2));
  const double tol = 1e-8 * std::sqrt(static_cast<double>(frob_p));
  if (resid > tol)
    throw NotRank2("chain '" + chain.label() + "' is not rank 2: residual " + std::to_string(resid) +
                   " of P - 1pi' beyond its best rank-1 fit (tolerance " + std::to_string(tol) + ")");

  std::vector<double> a(K);
  long double ab = 0, pia2 = 0, a2 = 0;
  for (std::size_t x = 0; x < K; ++x) {
    a[x] = alpha[chain.class_of(x)];
    ab += static_cast<long double>(a[x]) * b[x];
    pia2 += static_cast<long double>(pi[x]) * a[x] * a[x];
    a2 += static_cast<long double>(a[x]) * a[x];
  }
  const double trace_lambda = chain.trace() - 1.0;
  if (std::abs(trace_lambda - static_cast<double>(ab)) > 1e-9)
    throw Error("trace(P) - 1 disagrees with the rank-1 factor trace for '" + chain.label() + "'");

  double scale = std::sqrt(static_cast<double>(pia2));
  if (scale == 0.0) scale = std::sqrt(static_cast<double>(a2));

  if (std::abs(trace_lambda) < 1e-9) {
    d.kind = Rank2Kind::NonDiagonalizable;
    d.lambda2 = 0.0;
    for (std::size_t x = 0; x < K; ++x) {
      d.v[x] = a[x] / scale;
      d.u[x] = b[x] * scale;
    }
  } else {
    d.kind = Rank2Kind::Diagonalizable;
    d.lambda2 = std::clamp(trace_lambda, -1.0, 1.0);
    const double ub = scale / static_cast<double>(ab);
    for (std::size_t x = 0; x < K; ++x) {
      d.v[x] = a[x] / scale;
      d.u[x] = b[x] * ub;
    }
  }
  // Sign convention: first non-negligible v entry positive.
  for (std::size_t x = 0; x < K; ++x) {
    if (std::abs(d.v[x]) > 1e-9) {
      if (d.v[x] < 0.0) {
        for (auto& e : d.v) e = -e;
        for (auto& e : d.u) e = -e;
      }
      break;
    }
  }
  for (auto& e : d.v)
    if (e == 0.0) e = 0.0;  // drop negative zeros so grouping is stable
  for (auto& e : d.u)
    if (e == 0.0) e = 0.0;
  detail::build_groups(d);
  detail::check_decomposition(chain, d);
  return d;
}

inline Rank2Decomposition rank2_decompose(const RowClassChain& chain, StationaryOptions opt = {}) {
  const bool unique = has_unique_stationary(chain);
  return rank2_decompose(chain, stationary_distribution(chain, opt), unique);
}

}  // namespace gtm
