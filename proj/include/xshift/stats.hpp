#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "xshift/parallel.hpp"
#include "xshift/simplex.hpp"

namespace xshift {

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;   // sample standard deviation (n - 1)
  double sem = 0.0;  // sd / sqrt(n)
};

/// Mean, sample sd and standard error. Sums use the fixed-shape pairwise
/// reduction so the result depends only on the values and their order.
inline SampleSummary summarize(std::span<const double> v) {
  SampleSummary s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = pairwise_sum(v) / static_cast<double>(v.size());
  if (v.size() > 1) {
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - s.mean) * (v[i] - s.mean);
    s.sd = std::sqrt(pairwise_sum(sq) / static_cast<double>(v.size() - 1));
    s.sem = s.sd / std::sqrt(static_cast<double>(v.size()));
  }
  return s;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double half_width() const { return 0.5 * (hi - lo); }
};

/// Wilson score interval for a binomial proportion, z = 1.96 by default.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

/// Least-squares slope of log(y) against log(x). NaN unless there are at
/// least two points, all positive, with distinct x.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (x.size() != y.size() || x.size() < 2) return nan;
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return nan;
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double n = static_cast<double>(x.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  return sxx > 0.0 ? sxy / sxx : nan;
}

}  // namespace xshift
