#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "accrete/analytic.hpp"
#include "accrete/normal.hpp"
#include "accrete/rng.hpp"

// Exact generators for everything the engines consume: Poisson point
// fields, first-passage times of drifted Brownian motion, and endpoint
// positions conditioned on not crossing a barrier.

namespace accrete::sampling {

// Probability that a Brownian bridge over a step of length h, pinned at
// heights x0 > 0 and x1 > 0 above a static barrier, dips below it:
//   p = exp(-2 x0 x1 / h).
inline double bridge_cross_prob(double x0, double x1, double h) {
  if (!(x0 > 0.0 && x1 > 0.0 && h > 0.0)) {
    throw std::invalid_argument("bridge_cross_prob: x0, x1, h must be > 0");
  }
  return std::exp(-2.0 * x0 * x1 / h);
}

// Standard normal conditioned on z >= a. Plain rejection is fine for small
// a; Robert's shifted-exponential proposal takes over where the tail is
// thin. Both paths are exact.
inline double truncated_std_normal_lower(double a, RngStream& rng) {
  if (a < 0.5) {
    while (true) {
      const double z = rng.normal();
      if (z >= a) return z;
    }
  }
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  while (true) {
    const double z = a + rng.exponential() / alpha;
    const double d = z - alpha;
    if (rng.u01() <= std::exp(-0.5 * d * d)) return z;
  }
}

// First-passage time from distance a > 0 to the barrier under leftward
// drift v. For v > 0 this is inverse-Gaussian(mean a/v, shape a^2), sampled
// by the Michael-Schucany-Haas two-root transformation; for v = 0 it is the
// Levy law a^2 / Z^2. Either way the CDF is max_drifted_bm_tail(a, v, .).
inline double fpt_sample(double a, double v, RngStream& rng) {
  if (!(a > 0.0)) throw std::invalid_argument("fpt_sample: distance must be > 0");
  if (v < 0.0) throw std::invalid_argument("fpt_sample: drift must be >= 0");
  if (v == 0.0) {
    double z = rng.normal();
    while (z == 0.0) z = rng.normal();
    return (a / z) * (a / z);
  }
  const double mu = a / v;
  const double shape = a * a;
  const double nu = rng.normal();
  const double y = nu * nu;
  const double x = mu + mu * mu * y / (2.0 * shape) -
                   mu / (2.0 * shape) *
                       std::sqrt(4.0 * mu * shape * y + mu * mu * y * y);
  if (rng.u01() <= mu / (mu + x)) return x;
  return mu * mu / x;
}

namespace detail {

// Tabulated inverse-CDF fallback for the conditioned endpoint: linear grid
// through the bulk, geometric spacing in the tail, trapezoid CDF, linear
// interpolation on inversion.
inline double survivor_endpoint_table(double x, double b, double dt, double v,
                                      RngStream& rng) {
  constexpr int kPoints = 2048;
  constexpr int kLinear = 1536;
  const double sd = std::sqrt(dt);
  const double mean_off = std::max(x - v * dt - b, 0.0);
  const double bulk = mean_off + 4.0 * sd;
  const double far = mean_off + 12.0 * sd;
  std::vector<double> s(kPoints), dens(kPoints);
  for (int i = 0; i < kLinear; ++i) {
    s[i] = bulk * (i + 1) / kLinear;
  }
  const double ratio = std::pow(far / bulk, 1.0 / (kPoints - kLinear));
  for (int i = kLinear; i < kPoints; ++i) {
    s[i] = s[i - 1] * ratio;
  }
  const double m = x - v * dt;
  for (int i = 0; i < kPoints; ++i) {
    const double y = b + s[i];
    const double z = (y - m) / sd;
    dens[i] = normal_pdf(z) * (-std::expm1(-2.0 * (x - b) * s[i] / dt));
  }
  std::vector<double> cdf(kPoints, 0.0);
  for (int i = 1; i < kPoints; ++i) {
    cdf[i] = cdf[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * (s[i] - s[i - 1]);
  }
  const double total = cdf.back();
  const double u = rng.u01() * total;
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  const std::size_t hi = std::min<std::size_t>(
      std::max<std::size_t>(it - cdf.begin(), 1), kPoints - 1);
  const double seg = cdf[hi] - cdf[hi - 1];
  const double frac = seg > 0.0 ? (u - cdf[hi - 1]) / seg : 0.5;
  return b + s[hi - 1] + frac * (s[hi] - s[hi - 1]);
}

} // namespace detail

struct EndpointStats {
  std::uint64_t table_fallbacks = 0;
};

// Position at time dt of a particle started at x > b, conditioned on its
// path staying above b throughout. Proposal: the free Gaussian endpoint
// truncated to (b, inf); accept with the Brownian-bridge no-crossing
// probability 1 - exp(-2 (x-b)(y-b)/dt), which does not depend on the
// drift. Rejection stalls only when x-b << sqrt(dt); after 10^4 tries the
// tabulated inverse CDF takes over.
inline double survivor_endpoint_sample(double x, double b, double dt, double v,
                                       RngStream& rng,
                                       EndpointStats* stats = nullptr) {
  if (!(x > b)) throw std::invalid_argument("survivor_endpoint_sample: x must be > b");
  if (!(dt > 0.0)) throw std::invalid_argument("survivor_endpoint_sample: dt must be > 0");
  const double sd = std::sqrt(dt);
  const double m = x - v * dt;
  const double a_trunc = (b - m) / sd;
  const double two_dist = 2.0 * (x - b);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double z = truncated_std_normal_lower(a_trunc, rng);
    const double y = m + z * sd;
    if (y <= b) continue; // grazing the barrier at double resolution
    const double p_accept = -std::expm1(-two_dist * (y - b) / dt);
    if (p_accept >= 1.0 || rng.u01() <= p_accept) return y;
  }
  if (stats != nullptr) ++stats->table_fallbacks;
  return detail::survivor_endpoint_table(x, b, dt, v, rng);
}

// Poisson point field of density lambda on (a, b], sorted ascending.
// Exact ties get the later point redrawn; they carry zero probability but
// the strict ordering downstream is worth protecting.
inline std::vector<double> poisson_field(double lambda, double a, double b,
                                         RngStream& rng) {
  if (!(a < b)) throw std::invalid_argument("poisson_field: need a < b");
  if (lambda < 0.0) throw std::invalid_argument("poisson_field: lambda must be >= 0");
  const long long n = rng.poisson(lambda * (b - a));
  std::vector<double> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) p = a + (b - a) * rng.u01();
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size();) {
    if (pts[i] == pts[i - 1]) {
      pts[i] = a + (b - a) * rng.u01();
      std::sort(pts.begin(), pts.end());
      i = 1;
    } else {
      ++i;
    }
  }
  return pts;
}

} // namespace accrete::sampling
