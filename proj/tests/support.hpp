#pragma once

// Shared enumeration oracle for the tests. Walks every length-n path from X_1 ~ pi.

#include <functional>
#include <vector>

#include "gtmarkov/gtmarkov.hpp"

namespace gtm::testing {

using PathVisitor = std::function<void(const std::vector<std::size_t>&, double)>;

inline void enumerate_paths(const RowClassChain& chain, const Distribution& pi, std::size_t n,
                            const PathVisitor& visit) {
  const auto P = chain.dense(64);
  const std::size_t K = chain.state_count();
  std::vector<std::size_t> seq(n);
  auto rec = [&](auto&& self, std::size_t depth, double prob) -> void {
    if (depth == n) {
      visit(seq, prob);
      return;
    }
    for (std::size_t y = 0; y < K; ++y) {
      const double p = depth == 0 ? pi[y] : P(seq[depth - 1], y);
      if (p == 0.0) continue;
      seq[depth] = y;
      self(self, depth + 1, prob * p);
    }
  };
  rec(rec, 0, 1.0);
}

/// Pr(F_x = 0), Pr(F_x = 1) by enumeration.
inline OccupancyTail enumerated_tail(const RowClassChain& chain, const Distribution& pi, std::size_t x,
                                     std::size_t n) {
  long double p0 = 0, p1 = 0;
  enumerate_paths(chain, pi, n, [&](const std::vector<std::size_t>& s, double p) {
    std::size_t f = 0;
    for (auto y : s) f += y == x;
    if (f == 0) p0 += p;
    if (f == 1) p1 += p;
  });
  return {static_cast<double>(p0), static_cast<double>(p1)};
}

/// Two-class chain on 4 states: rows (t, 3/4 - t, 1/8, 1/8) for states 0,1 and (1/2, 0, 1/4, 1/4) for 2,3.
inline RowClassChain two_class_chain(double t) {
  return RowClassChain(4,
                       {RowClass::from_dense(std::vector<double>{t, 0.75 - t, 0.125, 0.125}),
                        RowClass::from_dense(std::vector<double>{0.5, 0.0, 0.25, 0.25})},
                       {0, 0, 1, 1}, "two-class");
}

/// Grid search over t for the smallest eigenvalue gap of T_0.
inline double degenerate_parameter(std::size_t steps = 1024) {
  double best_t = 0.0, best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < steps * 3 / 4; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps);
    const auto d = rank2_decompose(two_class_chain(t));
    const double gap = std::abs(srd_matrix(d, 0).discriminant());
    if (gap < best) {
      best = gap;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace gtm::testing
