#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

#include "bperc/errors.hpp"

namespace bperc {

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ95OneSided = 1.6448536269514722;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = kZ95) {
  if (trials == 0) throw InvalidArgument("wilson_interval: zero trials");
  const double n = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (ph + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Running mean and variance of a sample. Merging is exact for the integer
/// count; floating sums are merged in a fixed order by callers to stay
/// reproducible.
struct MeanAccumulator {
  std::uint64_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const MeanAccumulator& o) {
    n += o.n;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double variance() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double v = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return v > 0 ? v : 0.0;
  }
  double standard_error() const { return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Weighted least squares y = a + b x. Weights are inverse variances; the
/// slope standard error uses the residual scatter when it exceeds the
/// weights' prediction.
inline LinearFit weighted_linear_fit(std::span<const double> x, std::span<const double> y,
                                     std::span<const double> w) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || w.size() != n) throw InsufficientData("linear fit needs at least two points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
    syy += w[i] * (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) throw InsufficientData("linear fit: degenerate abscissae");
  LinearFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += w[i] * r * r;
  }
  f.r_squared = syy > 0 ? 1.0 - rss / syy : 1.0;
  const double scale = n > 2 ? std::max(1.0, rss / static_cast<double>(n - 2)) : 1.0;
  f.slope_se = std::sqrt(scale / sxx);
  return f;
}

}  // namespace bperc
