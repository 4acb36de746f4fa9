#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "gtmarkov/error.hpp"

namespace gtm {

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Least squares of log(value) on log(n).
inline LogLogFit rate_fit(std::span<const std::pair<double, double>> points) {
  require(points.size() >= 3, "rate_fit needs at least 3 points");
  const double m = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (auto [n, y] : points) {
    require(n > 0.0 && y > 0.0, "rate_fit needs positive n and values");
    sx += std::log(n);
    sy += std::log(y);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (auto [n, y] : points) {
    const double dx = std::log(n) - mx, dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0.0, "rate_fit needs at least two distinct n");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points = points.size();
  return fit;
}

inline LogLogFit rate_fit(const std::vector<std::pair<double, double>>& points) {
  return rate_fit(std::span<const std::pair<double, double>>(points));
}

}  // namespace gtm
