#pragma once

#include <cmath>

// Standard normal CDF / survival / density helpers used throughout the
// library. The survival function is computed directly from erfc so it keeps
// full relative accuracy for large arguments, where 1 - Phi(z) would lose
// everything to cancellation.

namespace accrete {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kSqrt2OverPi = 0.79788456080286535588;

inline double normal_pdf(double z) {
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z * kInvSqrt2);
}

inline double normal_sf(double z) {
  return 0.5 * std::erfc(z * kInvSqrt2);
}

// log Phi(z). erfc keeps roughly full precision down to z ~ -30 and only
// underflows near z ~ -37.6, so the exact path is used while it is accurate
// and the Mills-ratio asymptotic series
//   PhiBar(x) ~ phi(x)/x * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...)
// takes over below, where the series itself is already at machine precision.
inline double normal_logcdf(double z) {
  if (z >= -30.0) {
    return std::log(normal_cdf(z));
  }
  const double x = -z;
  const double inv_x2 = 1.0 / (x * x);
  double series = 1.0;
  double term = 1.0;
  for (int k = 1; k <= 7; ++k) {
    term *= -(2.0 * k - 1.0) * inv_x2;
    series += term;
  }
  return -0.5 * x * x - std::log(x) - kLogSqrt2Pi + std::log(series);
}

inline double normal_logsf(double z) { return normal_logcdf(-z); }

} // namespace accrete
