#pragma once

// Reference computations that do not use the rank-2 structure. Slow, but each is
// an independent route to the quantities computed in exact_bias.hpp.

#include <cmath>
#include <cstdint>
#include <vector>

#include "gtmarkov/chain.hpp"
#include "gtmarkov/decomposition.hpp"
#include "gtmarkov/exact_bias.hpp"

namespace gtm {

/// E[G_0 - M_0] by enumerating all K^n sequences from X_1 ~ pi.
inline double brute_force_bias(const RowClassChain& chain, const Distribution& pi, std::uint64_t n) {
  const std::size_t K = chain.state_count();
  require(pi.size() == K, "distribution length mismatch");
  require(n >= 1, "n must be positive");
  double count = 1.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    count *= static_cast<double>(K);
    require(count <= 1e7, "brute force refused: K^n exceeds 1e7");
  }
  const auto P = chain.dense(64);
  std::vector<std::uint32_t> occ(K, 0);
  const double N = static_cast<double>(n);
  long double total = 0;
  // missing = sum of pi over unseen states, kept incrementally
  auto rec = [&](auto&& self, std::uint64_t depth, std::size_t last, double prob, long phi1,
                 double missing) -> void {
    if (depth == n) {
      total += static_cast<long double>(prob) * (static_cast<double>(phi1) / N - missing);
      return;
    }
    for (std::size_t y = 0; y < K; ++y) {
      const double p = depth == 0 ? pi[y] : P(last, y);
      if (p == 0.0) continue;
      const std::uint32_t before = occ[y]++;
      const long dphi = before == 0 ? 1 : (before == 1 ? -1 : 0);
      self(self, depth + 1, y, prob * p, phi1 + dphi, before == 0 ? missing - pi[y] : missing);
      --occ[y];
    }
  };
  rec(rec, 0, 0, 1.0, 0, 1.0);
  return static_cast<double>(total);
}

inline double brute_force_bias(const RowClassChain& chain, std::uint64_t n) {
  return brute_force_bias(chain, stationary_distribution(chain), n);
}

/// Pr(F_x = 0) and Pr(F_x = 1) by a forward pass over (current state, visits to x in {0, 1}).
inline OccupancyTail transfer_matrix_tail(const RowClassChain& chain, const Distribution& pi, std::size_t x,
                                          std::uint64_t n) {
  const std::size_t K = chain.state_count();
  require(K <= 4096, "transfer-matrix oracle refused: K > 4096");
  require(n >= 1 && n <= 1000000, "transfer-matrix oracle needs 1 <= n <= 1e6");
  require(x < K, "state out of range");
  require(pi.size() == K, "distribution length mismatch");
  std::vector<double> none(K), once(K, 0.0);
  for (std::size_t y = 0; y < K; ++y) none[y] = pi[y];
  once[x] = none[x];
  none[x] = 0.0;
  for (std::uint64_t step = 1; step < n; ++step) {
    auto n0 = chain.left_multiply(none);
    auto n1 = chain.left_multiply(once);
    n1[x] = n0[x];
    n0[x] = 0.0;
    none.swap(n0);
    once.swap(n1);
  }
  long double p0 = 0, p1 = 0;
  for (std::size_t y = 0; y < K; ++y) {
    p0 += none[y];
    p1 += once[y];
  }
  return {static_cast<double>(p0), static_cast<double>(p1)};
}

inline OccupancyTail transfer_matrix_tail(const RowClassChain& chain, std::size_t x, std::uint64_t n) {
  return transfer_matrix_tail(chain, stationary_distribution(chain), x, n);
}

}  // namespace gtm
