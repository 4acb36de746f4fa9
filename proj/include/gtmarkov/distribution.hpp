#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "gtmarkov/error.hpp"

namespace gtm {

/// Probability mass over states 0..K-1.
struct Distribution {
  std::vector<double> probs;

  Distribution() = default;
  explicit Distribution(std::vector<double> p) : probs(std::move(p)) {}

  static Distribution uniform(std::size_t K) {
    return Distribution(std::vector<double>(K, 1.0 / static_cast<double>(K)));
  }

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }

  double total() const {
    long double s = 0;
    for (double p : probs) s += p;
    return static_cast<double>(s);
  }

  bool has_zero_support() const {
    for (double p : probs)
      if (p == 0.0) return true;
    return false;
  }
};

/// Throws InvalidArgument unless entries are in [0,1] and sum to 1 within tol.
inline void validate(const Distribution& d, double tol = 1e-12) {
  require(!d.probs.empty(), "distribution is empty");
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double p = d[i];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      throw InvalidArgument("distribution entry " + std::to_string(i) +
                            " out of [0,1]: " + std::to_string(p));
  }
  const double s = d.total();
  if (std::abs(s - 1.0) > tol)
    throw InvalidArgument("distribution sums to " + std::to_string(s) +
                          ", not 1");
}

}  // namespace gtm
