// Standard normal density, distribution and the ratios the probit
// likelihood needs, evaluated without underflow in the far left tail.

#pragma once

#include <cmath>
#include <numbers>

namespace irsq::normal {

inline constexpr double inv_sqrt_2pi = 0.3989422804014327;

inline double pdf(double x) { return inv_sqrt_2pi * std::exp(-0.5 * x * x); }

inline double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// 1 - cdf(x), accurate in the right tail.
inline double sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// log cdf(x); falls back to the asymptotic series once erfc underflows.
inline double log_cdf(double x) {
  if (x > -30.0) return std::log(cdf(x));
  const double x2 = x * x;
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

/// pdf(x) / cdf(x), the inverse Mills ratio of the left tail.
inline double mills(double x) {
  if (x > -30.0) return pdf(x) / cdf(x);
  const double x2 = x * x;
  return -x / (1.0 - 1.0 / x2 + 3.0 / (x2 * x2));
}

/// Quantile by bisection on the tail-accurate cdf. Intended for table
/// construction, not inner loops.
inline double quantile(double p) {
  if (p <= 0.0) return -INFINITY;
  if (p >= 1.0) return INFINITY;
  if (p > 0.5) return -quantile(1.0 - p);
  double lo = -40.0;
  double hi = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace irsq::normal
