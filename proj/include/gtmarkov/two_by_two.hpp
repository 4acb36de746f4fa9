#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>

namespace gtm {

/// Real 2x2 matrix [[a11, a12], [a21, a22]].
struct TwoByTwo {
  double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

  static constexpr TwoByTwo identity() { return {1.0, 0.0, 0.0, 1.0}; }

  constexpr double trace() const { return a11 + a22; }
  constexpr double det() const { return a11 * a22 - a12 * a21; }

  /// (lambda_1 - lambda_2)^2 = (a11 - a22)^2 + 4 a12 a21.
  constexpr double discriminant() const { return (a11 - a22) * (a11 - a22) + 4.0 * a12 * a21; }

  friend constexpr TwoByTwo operator*(const TwoByTwo& x, const TwoByTwo& y) {
    return {x.a11 * y.a11 + x.a12 * y.a21, x.a11 * y.a12 + x.a12 * y.a22,
            x.a21 * y.a11 + x.a22 * y.a21, x.a21 * y.a12 + x.a22 * y.a22};
  }
  friend constexpr TwoByTwo operator*(double s, const TwoByTwo& x) {
    return {s * x.a11, s * x.a12, s * x.a21, s * x.a22};
  }
  friend constexpr TwoByTwo operator+(const TwoByTwo& x, const TwoByTwo& y) {
    return {x.a11 + y.a11, x.a12 + y.a12, x.a21 + y.a21, x.a22 + y.a22};
  }
  friend constexpr TwoByTwo operator-(const TwoByTwo& x, const TwoByTwo& y) {
    return {x.a11 - y.a11, x.a12 - y.a12, x.a21 - y.a21, x.a22 - y.a22};
  }

  constexpr std::array<double, 2> apply(std::array<double, 2> col) const {
    return {a11 * col[0] + a12 * col[1], a21 * col[0] + a22 * col[1]};
  }

  double max_abs_diff(const TwoByTwo& o) const {
    return std::fmax(std::fmax(std::abs(a11 - o.a11), std::abs(a12 - o.a12)),
                     std::fmax(std::abs(a21 - o.a21), std::abs(a22 - o.a22)));
  }
};

/// row' * M * col
constexpr double bilinear(std::array<double, 2> row, const TwoByTwo& m, std::array<double, 2> col) {
  const auto mc = m.apply(col);
  return row[0] * mc[0] + row[1] * mc[1];
}

/// M^l by binary exponentiation.
inline TwoByTwo power(TwoByTwo m, std::uint64_t l) {
  TwoByTwo out = TwoByTwo::identity();
  while (l > 0) {
    if (l & 1U) out = out * m;
    m = m * m;
    l >>= 1U;
  }
  return out;
}

/// Real eigenvalues (lambda_1 >= lambda_2) and their gap Delta >= 0.
/// A slightly negative discriminant from rounding is treated as zero.
struct RealEigen {
  double lambda1 = 0.0, lambda2 = 0.0, delta = 0.0;
};

inline RealEigen real_eigen(const TwoByTwo& m) {
  const double disc = m.discriminant();
  const double delta = std::sqrt(std::fmax(disc, 0.0));
  const double tau = m.trace();
  return {0.5 * (tau + delta), 0.5 * (tau - delta), delta};
}

/// M^l = [l1^l (M - l2 I) - l2^l (M - l1 I)] / (l1 - l2); needs distinct real eigenvalues.
inline TwoByTwo power_by_eigen(const TwoByTwo& m, std::uint64_t l) {
  const auto e = real_eigen(m);
  const double p1 = std::pow(e.lambda1, static_cast<double>(l));
  const double p2 = std::pow(e.lambda2, static_cast<double>(l));
  const TwoByTwo I = TwoByTwo::identity();
  return (1.0 / e.delta) * (p1 * (m - e.lambda2 * I) - p2 * (m - e.lambda1 * I));
}

/// sum_{j=0}^{k} a^j b^{k-j} = (a^{k+1} - b^{k+1}) / (a - b), with d = a - b >= 0 passed in.
/// Same-sign nonzero pairs use expm1/log1p so small d loses no precision; d == 0 gives (k+1) a^k.
inline double homogeneous_power_sum(double a, double b, double d, std::uint64_t k) {
  const double kk = static_cast<double>(k);
  if (d == 0.0) return (kk + 1.0) * std::pow(a, kk);
  if (b != 0.0 && (a > 0.0) == (b > 0.0)) {
    // a^{k+1} - b^{k+1} = b^{k+1} * expm1((k+1) log1p(d / b)); once the exponent is large
    // there is no cancellation left and b^k may underflow against an overflowing expm1
    const double e = (kk + 1.0) * std::log1p(d / b);
    if (e < 30.0) return std::pow(b, kk) * (b / d) * std::expm1(e);
  }
  return (std::pow(a, kk + 1.0) - std::pow(b, kk + 1.0)) / d;
}

}  // namespace gtm
