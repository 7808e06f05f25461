#pragma once

#include <cmath>
#include <stdexcept>

#include "accrete/normal.hpp"
#include "accrete/quadrature.hpp"

// Closed-form laws for a Brownian particle with leftward drift v against an
// absorbing level, and the Poisson-field functionals built on top of them.
// Everything here is pure and stateless.

namespace accrete::analytic {

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}
} // namespace detail

// P( max_{s<=t} (v s + w(s)) >= x )
//   = PhiBar((x - v t)/sqrt(t)) + e^{2 v x} Phi((-x - v t)/sqrt(t)).
// The second factor pair is evaluated as exp(2 v x + log Phi(.)) so that
// neither the exponential nor the Gaussian tail over/underflows on its own.
// x = 0 is handled up front: the running maximum starts at the level.
inline double max_drifted_bm_tail(double x, double v, double t) {
  detail::require(t > 0.0, "max_drifted_bm_tail: t must be > 0");
  detail::require(x >= 0.0, "max_drifted_bm_tail: x must be >= 0");
  if (x == 0.0) return 1.0;
  const double s = std::sqrt(t);
  const double term1 = normal_sf((x - v * t) / s);
  const double term2 = std::exp(2.0 * v * x + normal_logcdf((-x - v * t) / s));
  const double p = term1 + term2;
  return p < 1.0 ? p : 1.0;
}

// Probability that a particle started at x > 0, moving as x - v s + w(s),
// reaches the origin within time t. Equals max_drifted_bm_tail(x, v, t);
// for v = 0 it reduces to 2 PhiBar(x / sqrt(t)).
inline double hit_prob_fixed(double x, double v, double t) {
  detail::require(x > 0.0, "hit_prob_fixed: x must be > 0");
  return max_drifted_bm_tail(x, v, t);
}

// Mean number of zero-drift hits on a fixed boundary by time t for a unit
// Poisson field of density lambda: lambda * sqrt(2 t / pi).
inline double mean_fixed_hits(double lambda, double t) {
  detail::require(lambda > 0.0, "mean_fixed_hits: lambda must be > 0");
  detail::require(t >= 0.0, "mean_fixed_hits: t must be >= 0");
  return lambda * kSqrt2OverPi * std::sqrt(t);
}

// First-passage density to the origin for a zero-drift particle started at
// x > 0:  g(t, x) = x / sqrt(2 pi t^3) * exp(-x^2 / (2 t)).
inline double first_hit_density(double t, double x) {
  detail::require(t > 0.0, "first_hit_density: t must be > 0");
  detail::require(x > 0.0, "first_hit_density: x must be > 0");
  return x / (t * std::sqrt(t)) * kInvSqrt2Pi * std::exp(-x * x / (2.0 * t));
}

// CDF of the same first-passage time: 2 PhiBar(x / sqrt(T)).
inline double first_hit_cdf(double t, double x) {
  detail::require(t > 0.0, "first_hit_cdf: t must be > 0");
  detail::require(x > 0.0, "first_hit_cdf: x must be > 0");
  return 2.0 * normal_sf(x / std::sqrt(t));
}

// Sub-probability transition kernel of Brownian motion killed at 0:
//   sigma(t, x, y) = (e^{-(x-y)^2/2t} - e^{-(x+y)^2/2t}) / sqrt(2 pi t).
// Written with expm1 so the image-charge cancellation keeps accuracy when
// 2 x y / t is small.
inline double survivor_kernel(double t, double x, double y) {
  detail::require(t > 0.0, "survivor_kernel: t must be > 0");
  detail::require(x > 0.0, "survivor_kernel: x must be > 0");
  detail::require(y > 0.0, "survivor_kernel: y must be > 0");
  const double d = x - y;
  const double gauss = kInvSqrt2Pi / std::sqrt(t) * std::exp(-d * d / (2.0 * t));
  return gauss * (-std::expm1(-2.0 * x * y / t));
}

// psi(t, y) = Phi(y/sqrt(t)) - Phi(-y/sqrt(t)): the rate factor of the
// conditional Poisson field, also the no-hit probability from height y.
inline double survivor_rate(double t, double y) {
  detail::require(t > 0.0, "survivor_rate: t must be > 0");
  detail::require(y >= 0.0, "survivor_rate: y must be >= 0");
  return std::erf(y * kInvSqrt2 / std::sqrt(t));
}

// Density of the first hit time over the whole field:
//   P(tau in dt) = lambda / sqrt(2 pi t) * exp(-lambda sqrt(2 t / pi)) dt,
// equivalently lambda * sqrt(2 tau / pi) ~ Exp(1).
inline double tau_density(double t, double lambda) {
  detail::require(t > 0.0, "tau_density: t must be > 0");
  detail::require(lambda > 0.0, "tau_density: lambda must be > 0");
  return lambda * kInvSqrt2Pi / std::sqrt(t) *
         std::exp(-lambda * kSqrt2OverPi * std::sqrt(t));
}

inline double tau_cdf(double t, double lambda) {
  detail::require(t >= 0.0, "tau_cdf: t must be >= 0");
  detail::require(lambda > 0.0, "tau_cdf: lambda must be > 0");
  return -std::expm1(-lambda * kSqrt2OverPi * std::sqrt(t));
}

inline double tau_median(double lambda) {
  detail::require(lambda > 0.0, "tau_median: lambda must be > 0");
  const double ln2 = 0.69314718055994530942;
  const double pi = 3.14159265358979323846;
  return pi * ln2 * ln2 / (2.0 * lambda * lambda);
}

// Window constant sigma(d) = int_0^d (2 Phi(x) - 1) dx, the per-sqrt(t)
// mean of the survivor count left of d sqrt(t).
inline double sigma_constant(double d) {
  detail::require(d > 0.0, "sigma_constant: d must be > 0");
  auto integrand = [](double x) { return std::erf(x * kInvSqrt2); };
  return quadrature::integrate(integrand, 0.0, d).value;
}

// Mean survivor count left of d sqrt(t): lambda * sigma(d) * sqrt(t).
inline double k0_mean(double lambda, double d, double t) {
  detail::require(lambda > 0.0, "k0_mean: lambda must be > 0");
  detail::require(t >= 0.0, "k0_mean: t must be >= 0");
  if (t == 0.0) return 0.0;
  return lambda * sigma_constant(d) * std::sqrt(t);
}

// Asymptotic boundary speed V = v * delta lambda / (1 - delta lambda),
// defined for the subcritical regime only.
inline double asymptotic_speed(double lambda, double delta, double v) {
  detail::require(lambda > 0.0 && delta > 0.0,
                  "asymptotic_speed: lambda and delta must be > 0");
  detail::require(v >= 0.0, "asymptotic_speed: drift must be >= 0");
  const double rho = lambda * delta;
  detail::require(rho < 1.0,
                  "asymptotic_speed: lambda*delta must be < 1 (no linear speed)");
  return v * rho / (1.0 - rho);
}

// Expected number of boundary hits within horizon T contributed by
// particles beyond the frontier F, for a boundary never exceeding xi_max:
//   lambda * int_F^inf P(max (v s + w) >= x - xi_max) dx.
// The plateau up to xi_max + vT is integrated on a finite window and the
// Gaussian tail through the rational substitution.
inline double truncation_tail_mass(double frontier, double xi_max, double horizon,
                                   double v, double lambda) {
  detail::require(frontier > xi_max,
                  "truncation_tail_mass: frontier must exceed xi_max");
  detail::require(horizon > 0.0, "truncation_tail_mass: horizon must be > 0");
  detail::require(lambda > 0.0, "truncation_tail_mass: lambda must be > 0");
  auto integrand = [&](double x) {
    return max_drifted_bm_tail(x - xi_max, v, horizon);
  };
  const double cut = xi_max + v * horizon + 10.0 * std::sqrt(horizon);
  double mass = 0.0;
  if (frontier < cut) {
    mass += quadrature::integrate(integrand, frontier, cut, 1e-12).value;
    mass += quadrature::integrate_to_inf(integrand, cut, 1e-13).value;
  } else {
    mass += quadrature::integrate_to_inf(integrand, frontier, 1e-13).value;
  }
  return lambda * std::max(mass, 0.0);
}

// sigma_hat(t, [a,b]) = int_a^b psi(t, y) dy. psi is within 1e-15 of 1
// beyond 8 sqrt(t); that stretch is added in closed form.
inline double psi_window_integral(double t, double a, double b) {
  detail::require(t > 0.0, "psi_window_integral: t must be > 0");
  detail::require(0.0 <= a && a <= b, "psi_window_integral: need 0 <= a <= b");
  if (a == b) return 0.0;
  const double flat_from = 8.0 * std::sqrt(t);
  double total = 0.0;
  const double b_quad = std::min(b, flat_from);
  if (a < b_quad) {
    auto integrand = [&](double y) { return survivor_rate(t, y); };
    total += quadrature::integrate(integrand, a, b_quad).value;
  }
  if (b > flat_from) {
    total += b - std::max(a, flat_from);
  }
  return total;
}

} // namespace accrete::analytic
