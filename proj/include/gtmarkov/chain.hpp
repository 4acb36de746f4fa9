#pragma once

// Compact transition matrices for chains whose rows take few distinct values.
//
// A RowClassChain stores each distinct row once, as a list of block runs
// (start, length, per-state mass), and maps every state to its row class.
// The P1/P2/P3 families at K = 2^13 need only a handful of runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gtmarkov/distribution.hpp"
#include "gtmarkov/error.hpp"

namespace gtm {

using State = std::uint32_t;

struct BlockRun {
  std::size_t start = 0;
  std::size_t length = 0;
  double mass = 0.0;  // per state

  std::size_t end() const { return start + length; }
  bool operator==(const BlockRun&) const = default;
};

/// One row distribution as sorted, disjoint runs of constant per-state mass.
/// Zero-mass runs are dropped and adjacent equal-mass runs are merged.
class RowClass {
 public:
  RowClass() = default;

  explicit RowClass(std::vector<BlockRun> runs) {
    std::sort(runs.begin(), runs.end(),
              [](const BlockRun& a, const BlockRun& b) { return a.start < b.start; });
    for (const auto& r : runs) {
      if (r.length == 0 || r.mass == 0.0) continue;
      if (!std::isfinite(r.mass) || r.mass < 0.0)
        throw InvalidArgument("row class run has invalid mass " + std::to_string(r.mass));
      if (!runs_.empty()) {
        auto& last = runs_.back();
        if (r.start < last.end()) throw InvalidArgument("row class runs overlap");
        if (r.start == last.end() && r.mass == last.mass) {
          last.length += r.length;
          continue;
        }
      }
      runs_.push_back(r);
    }
  }

  static RowClass from_dense(std::span<const double> row) {
    std::vector<BlockRun> runs;
    std::size_t j = 0;
    while (j < row.size()) {
      std::size_t k = j + 1;
      while (k < row.size() && row[k] == row[j]) ++k;
      runs.push_back({j, k - j, row[j]});
      j = k;
    }
    return RowClass(std::move(runs));
  }

  static RowClass uniform_block(std::size_t start, std::size_t length) {
    return RowClass({{start, length, 1.0 / static_cast<double>(length)}});
  }

  const std::vector<BlockRun>& runs() const { return runs_; }

  /// Largest state index + 1 touched by a run.
  std::size_t extent() const { return runs_.empty() ? 0 : runs_.back().end(); }

  double at(std::size_t j) const {
    auto it = std::upper_bound(runs_.begin(), runs_.end(), j,
                               [](std::size_t v, const BlockRun& r) { return v < r.start; });
    if (it == runs_.begin()) return 0.0;
    --it;
    return j < it->end() ? it->mass : 0.0;
  }

  double total() const {
    long double s = 0;
    for (const auto& r : runs_) s += static_cast<long double>(r.mass) * r.length;
    return static_cast<double>(s);
  }

  std::vector<double> dense(std::size_t K) const {
    std::vector<double> out(K, 0.0);
    for (const auto& r : runs_)
      for (std::size_t j = r.start; j < r.end(); ++j) out[j] = r.mass;
    return out;
  }

  /// sum_j row(j) * z_j
  double dot(std::span<const double> z) const {
    long double s = 0;
    for (const auto& r : runs_) {
      long double part = 0;
      for (std::size_t j = r.start; j < r.end(); ++j) part += z[j];
      s += part * r.mass;
    }
    return static_cast<double>(s);
  }

  /// out += scale * row
  void add_scaled_to(std::span<double> out, double scale) const {
    for (const auto& r : runs_) {
      const double m = scale * r.mass;
      for (std::size_t j = r.start; j < r.end(); ++j) out[j] += m;
    }
  }

  bool operator==(const RowClass&) const = default;

 private:
  std::vector<BlockRun> runs_;
};

/// Total variation distance between two row classes, computed on run boundaries.
inline double tv_distance(const RowClass& a, const RowClass& b) {
  std::vector<std::size_t> cuts;
  for (const auto* rc : {&a, &b})
    for (const auto& r : rc->runs()) {
      cuts.push_back(r.start);
      cuts.push_back(r.end());
    }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  long double s = 0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const std::size_t lo = cuts[k], len = cuts[k + 1] - cuts[k];
    s += std::abs(static_cast<long double>(a.at(lo)) - b.at(lo)) * len;
  }
  return static_cast<double>(0.5L * s);
}

struct ChainOptions {
  /// Accept stationary/row distributions with zero-mass states (recorded as a warning).
  bool allow_zero_support = true;
};

/// Row-stochastic K x K matrix stored by distinct rows. Immutable once built.
class RowClassChain {
 public:
  RowClassChain(std::size_t K, std::vector<RowClass> classes, std::vector<State> assignment,
                std::string label = {})
      : K_(K), classes_(std::move(classes)), assignment_(std::move(assignment)),
        label_(std::move(label)) {
    require(K_ >= 1, "chain needs at least one state");
    require(assignment_.size() == K_, "assignment length " + std::to_string(assignment_.size()) +
                                          " != K " + std::to_string(K_));
    require(!classes_.empty(), "chain has no row classes");
    std::vector<char> used(classes_.size(), 0);
    for (State c : assignment_) {
      require(c < classes_.size(), "state assigned to unknown row class " + std::to_string(c));
      used[c] = 1;
    }
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      require(used[c], "row class " + std::to_string(c) + " is never referenced");
      require(classes_[c].extent() <= K_, "row class " + std::to_string(c) + " exceeds K");
      const double t = classes_[c].total();
      if (std::abs(t - 1.0) > 1e-12)
        throw InvalidArgument("row class " + std::to_string(c) + " sums to " + std::to_string(t));
    }
    sizes_.assign(classes_.size(), 0);
    for (State c : assignment_) ++sizes_[c];
  }

  std::size_t state_count() const { return K_; }
  std::size_t class_count() const { return classes_.size(); }
  const RowClass& row_class(std::size_t c) const { return classes_[c]; }
  const std::vector<RowClass>& row_classes() const { return classes_; }
  State class_of(std::size_t x) const { return assignment_[x]; }
  const std::vector<State>& assignment() const { return assignment_; }
  const std::vector<std::size_t>& class_sizes() const { return sizes_; }
  const std::string& label() const { return label_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  double entry(std::size_t i, std::size_t j) const { return classes_[assignment_[i]].at(j); }

  double trace() const {
    long double s = 0;
    for (std::size_t x = 0; x < K_; ++x) s += entry(x, x);
    return static_cast<double>(s);
  }

  std::vector<double> row(std::size_t i) const { return classes_[assignment_[i]].dense(K_); }

  /// Dense materialization; only for oracles and small-K cross-checks.
  Eigen::MatrixXd dense(std::size_t max_states = 4096) const {
    require(K_ <= max_states, "dense materialization refused for K = " + std::to_string(K_));
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(K_, K_);
    for (std::size_t i = 0; i < K_; ++i)
      for (const auto& r : classes_[assignment_[i]].runs())
        for (std::size_t j = r.start; j < r.end(); ++j) P(i, j) = r.mass;
    return P;
  }

  /// Row vector times P, using one pass per class: out = sum_c (sum_{i in c} f_i) r_c.
  std::vector<double> left_multiply(std::span<const double> f) const {
    std::vector<double> mass(classes_.size(), 0.0);
    for (std::size_t i = 0; i < K_; ++i) mass[assignment_[i]] += f[i];
    std::vector<double> out(K_, 0.0);
    for (std::size_t c = 0; c < classes_.size(); ++c)
      if (mass[c] != 0.0) classes_[c].add_scaled_to(out, mass[c]);
    return out;
  }

 private:
  std::size_t K_;
  std::vector<RowClass> classes_;
  std::vector<State> assignment_;
  std::vector<std::size_t> sizes_;
  std::string label_;
  std::vector<std::string> warnings_;
};

/// Groups identical dense rows into classes.
inline RowClassChain from_dense_rows(const std::vector<std::vector<double>>& rows,
                                     std::string label = "dense") {
  const std::size_t K = rows.size();
  require(K >= 1, "empty matrix");
  std::map<std::vector<double>, State> seen;
  std::vector<RowClass> classes;
  std::vector<State> assignment(K);
  for (std::size_t i = 0; i < K; ++i) {
    require(rows[i].size() == K, "row " + std::to_string(i) + " has " +
                                     std::to_string(rows[i].size()) + " entries, expected " +
                                     std::to_string(K));
    auto [it, fresh] = seen.try_emplace(rows[i], static_cast<State>(classes.size()));
    if (fresh) classes.push_back(RowClass::from_dense(rows[i]));
    assignment[i] = it->second;
  }
  return RowClassChain(K, std::move(classes), std::move(assignment), std::move(label));
}

inline RowClassChain from_dense(const Eigen::MatrixXd& P, std::string label = "dense") {
  require(P.rows() == P.cols(), "matrix is not square");
  std::vector<std::vector<double>> rows(P.rows(), std::vector<double>(P.cols()));
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    for (Eigen::Index j = 0; j < P.cols(); ++j) rows[i][j] = P(i, j);
  return from_dense_rows(rows, std::move(label));
}

// ---------------------------------------------------------------------------
// Families

/// Every row equal to pi.
inline RowClassChain build_iid(const Distribution& pi, ChainOptions opt = {}) {
  validate(pi);
  const bool degenerate = pi.has_zero_support();
  if (degenerate && !opt.allow_zero_support)
    throw InvalidArgument("iid distribution has zero-mass states");
  RowClassChain chain(pi.size(), {RowClass::from_dense(pi.probs)},
                      std::vector<State>(pi.size(), 0), "iid");
  if (degenerate) chain.add_warning("degenerate support: some states have zero stationary mass");
  return chain;
}

/// P_ii = 1 - eta, P_ij = eta / (K - 1). Full rank for K >= 3 unless eta = (K-1)/K.
inline RowClassChain build_sticky(std::size_t K, double eta) {
  require(K >= 2, "sticky chain needs K >= 2");
  require(eta > 0.0 && eta < 1.0, "sticky chain needs eta in (0,1)");
  const double off = eta / static_cast<double>(K - 1);
  std::vector<RowClass> classes;
  std::vector<State> assignment(K);
  for (std::size_t i = 0; i < K; ++i) {
    std::vector<BlockRun> runs;
    if (i > 0) runs.push_back({0, i, off});
    runs.push_back({i, 1, 1.0 - eta});
    if (i + 1 < K) runs.push_back({i + 1, K - i - 1, off});
    classes.emplace_back(std::move(runs));
    assignment[i] = static_cast<State>(i);
  }
  return RowClassChain(K, std::move(classes), std::move(assignment), "sticky");
}

namespace detail {
inline void check_family_sizes(std::size_t K, std::size_t K1, const char* name) {
  require(K >= 2 && K % 2 == 0, std::string(name) + ": K must be even and >= 2, got " +
                                    std::to_string(K));
  require(K1 >= 2 && K1 % 2 == 0, std::string(name) + ": K1 must be even and >= 2, got " +
                                      std::to_string(K1));
  require(K1 <= K, std::string(name) + ": K1 must not exceed K");
}
}  // namespace detail

/// Two classes of uniform mass a = 2/(K+K1): class A on columns [0, (K+K1)/2),
/// class B on [(K-K1)/2, K). States [0, K/2) use A, the rest B.
inline RowClassChain build_p1(std::size_t K, std::size_t K1) {
  detail::check_family_sizes(K, K1, "P1");
  const double a = 2.0 / static_cast<double>(K + K1);
  RowClass A({{0, (K + K1) / 2, a}});
  RowClass B({{(K - K1) / 2, (K + K1) / 2, a}});
  std::vector<State> assignment(K, 1);
  std::fill(assignment.begin(), assignment.begin() + K / 2, 0);
  return RowClassChain(K, {A, B}, std::move(assignment), "p1");
}

/// Class F uniform on the first half of columns, class S on the second half.
/// Row blocks: (K-K1)/2 F, K1/2 S, K1/2 F, (K-K1)/2 S.
inline RowClassChain build_p2(std::size_t K, std::size_t K1) {
  detail::check_family_sizes(K, K1, "P2");
  const std::size_t h = (K - K1) / 2, m = K1 / 2;
  std::vector<State> assignment(K, 0);
  std::fill(assignment.begin() + h, assignment.begin() + h + m, 1);
  std::fill(assignment.begin() + K - h, assignment.end(), 1);
  return RowClassChain(K, {RowClass::uniform_block(0, K / 2), RowClass::uniform_block(K / 2, K / 2)},
                       std::move(assignment), "p2");
}

/// Classes: uniform on first half, uniform on all K, uniform on second half.
/// Row blocks: (K-K1)/2, K1, (K-K1)/2.
inline RowClassChain build_p3(std::size_t K, std::size_t K1) {
  detail::check_family_sizes(K, K1, "P3");
  const std::size_t h = (K - K1) / 2;
  std::vector<State> assignment(K, 1);
  std::fill(assignment.begin(), assignment.begin() + h, 0);
  std::fill(assignment.end() - h, assignment.end(), 2);
  std::vector<RowClass> classes{RowClass::uniform_block(0, K / 2), RowClass::uniform_block(0, K),
                                RowClass::uniform_block(K / 2, K / 2)};
  // With K1 == K the outer classes are unreferenced.
  if (h == 0) {
    classes = {RowClass::uniform_block(0, K)};
    std::fill(assignment.begin(), assignment.end(), 0);
  }
  return RowClassChain(K, std::move(classes), std::move(assignment), "p3");
}

/// (r x r right shift) kron (n/r x n/r matrix of r/n): block k moves uniformly into block k+1 mod r.
inline RowClassChain build_periodic_kronecker(std::size_t n_states, std::size_t r) {
  require(r >= 2, "periodic chain needs r >= 2");
  require(n_states % r == 0, "periodic chain needs r | n_states (n_states = " +
                                 std::to_string(n_states) + ", r = " + std::to_string(r) + ")");
  const std::size_t b = n_states / r;
  std::vector<RowClass> classes;
  std::vector<State> assignment(n_states);
  for (std::size_t k = 0; k < r; ++k) {
    classes.push_back(RowClass::uniform_block(((k + 1) % r) * b, b));
    for (std::size_t i = 0; i < b; ++i) assignment[k * b + i] = static_cast<State>(k);
  }
  return RowClassChain(n_states, std::move(classes), std::move(assignment), "periodic");
}

/// Block diagonal, each half uniform within itself. lambda_2 = 1.
inline RowClassChain build_reducible_two_block(std::size_t K) {
  require(K >= 2 && K % 2 == 0, "reducible two-block chain needs even K");
  std::vector<State> assignment(K, 1);
  std::fill(assignment.begin(), assignment.begin() + K / 2, 0);
  return RowClassChain(K, {RowClass::uniform_block(0, K / 2), RowClass::uniform_block(K / 2, K / 2)},
                       std::move(assignment), "reducible");
}

// ---------------------------------------------------------------------------
// Named families for sweeps (K = n, K1 ~ n^kappa)

enum class Family { Iid, Sticky, P1, P2, P3, Periodic, Reducible, File };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::Iid: return "iid";
    case Family::Sticky: return "sticky";
    case Family::P1: return "p1";
    case Family::P2: return "p2";
    case Family::P3: return "p3";
    case Family::Periodic: return "periodic";
    case Family::Reducible: return "reducible";
    case Family::File: return "file";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  for (Family f : {Family::Iid, Family::Sticky, Family::P1, Family::P2, Family::P3,
                   Family::Periodic, Family::Reducible, Family::File})
    if (to_string(f) == s) return f;
  throw InvalidArgument("unknown chain family '" + s + "'");
}

/// K1 = n^kappa rounded to the nearest even integer, clamped to [2, K].
inline std::size_t family_k1(std::size_t K, double kappa) {
  require(kappa > 0.0 && kappa <= 1.0, "kappa must lie in (0, 1]");
  const double target = std::pow(static_cast<double>(K), kappa);
  auto k1 = static_cast<long long>(2.0 * std::round(target / 2.0));
  k1 = std::clamp<long long>(k1, 2, static_cast<long long>(K));
  if (k1 % 2 != 0) --k1;
  return static_cast<std::size_t>(k1);
}

inline RowClassChain build_connected_family(Family f, std::size_t K, std::size_t K1) {
  switch (f) {
    case Family::P1: return build_p1(K, K1);
    case Family::P2: return build_p2(K, K1);
    case Family::P3: return build_p3(K, K1);
    default: throw InvalidArgument("family " + to_string(f) + " is not one of p1/p2/p3");
  }
}

}  // namespace gtm
