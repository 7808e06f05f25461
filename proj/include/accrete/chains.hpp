#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "accrete/analytic.hpp"
#include "accrete/rng.hpp"
#include "accrete/sampling.hpp"

// The two embedded chains that decide whether a single boundary jump
// terminates. The m-chain feeds each probe interval with a homogeneous
// Poisson count; the mu-chain conditions on the first hit happening at time
// t, which thins the field near the origin through psi(t, .). Absorption at
// zero count means the jump recurrence closed; escape to infinity is the
// explosion witness.

namespace accrete::chains {

inline double poisson_pmf(double mean, long long k) {
  if (k < 0) return 0.0;
  if (mean <= 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(k) * std::log(mean) - mean -
                  std::lgamma(static_cast<double>(k) + 1.0));
}

// ---------------------------------------------------------------------------
// m-chain: next count ~ Poisson(m * lambda * delta); 0 is absorbing.
// ---------------------------------------------------------------------------

inline double m_transition_mean(long long m, double lambda, double delta) {
  if (m < 0) throw std::invalid_argument("m-chain: state must be >= 0");
  return static_cast<double>(m) * lambda * delta;
}

inline double m_step_drift(long long m, double lambda, double delta) {
  return static_cast<double>(m) * (lambda * delta - 1.0);
}

// Pmf over the next state, truncated where the remaining tail mass drops
// below tail_eps. The absorbing state returns a point mass at zero.
inline std::vector<double> m_transition_pmf(long long m, double lambda,
                                            double delta,
                                            double tail_eps = 1e-12) {
  const double mean = m_transition_mean(m, lambda, delta);
  if (m == 0 || mean == 0.0) return {1.0};
  std::vector<double> pmf;
  double cum = 0.0;
  for (long long k = 0;; ++k) {
    const double p = poisson_pmf(mean, k);
    pmf.push_back(p);
    cum += p;
    if (1.0 - cum < tail_eps && static_cast<double>(k) > mean) break;
  }
  return pmf;
}

struct AbsorptionEstimate {
  double absorbed_fraction = 0.0;
  double mean_total_progeny = 0.0; // over absorbed runs, initial state included
  long long absorbed = 0;
  long long escaped = 0;    // crossed the escape threshold
  long long unresolved = 0; // still wandering after max_steps
};

inline AbsorptionEstimate m_absorption_estimate(
    long long m0, double lambda, double delta, long long max_steps,
    long long replicas, std::uint64_t seed,
    long long escape_threshold = 10'000) {
  if (m0 < 0) throw std::invalid_argument("m-chain: m0 must be >= 0");
  AbsorptionEstimate est;
  double progeny_sum = 0.0;
  for (long long r = 0; r < replicas; ++r) {
    RngStream rng(seed, static_cast<std::uint32_t>(r), 0);
    long long m = m0;
    double progeny = static_cast<double>(m0);
    long long steps = 0;
    while (m > 0 && m < escape_threshold && steps < max_steps) {
      m = rng.poisson(static_cast<double>(m) * lambda * delta);
      progeny += static_cast<double>(m);
      ++steps;
    }
    if (m == 0) {
      ++est.absorbed;
      progeny_sum += progeny;
    } else if (m >= escape_threshold) {
      ++est.escaped;
    } else {
      ++est.unresolved;
    }
  }
  est.absorbed_fraction =
      static_cast<double>(est.absorbed) / static_cast<double>(replicas);
  est.mean_total_progeny =
      est.absorbed > 0 ? progeny_sum / static_cast<double>(est.absorbed) : 0.0;
  return est;
}

// ---------------------------------------------------------------------------
// mu-chain: the probe interval D = [left_edge, left_edge + m_cur * delta]
// is fed by the inhomogeneous field with rate lambda * psi(t, .).
// ---------------------------------------------------------------------------

struct MuChainState {
  long long m_prev = 1;
  long long m_cur = 1;
  double left_edge = 0.0;
  double t = 1.0; // conditioning first-hit time tau = t
};

inline double mu_transition_mean(const MuChainState& s, double lambda,
                                 double delta) {
  if (s.m_cur < 0) throw std::invalid_argument("mu-chain: m_cur must be >= 0");
  if (!(s.t > 0.0)) throw std::invalid_argument("mu-chain: t must be > 0");
  if (s.m_cur == 0) return 0.0;
  const double right = s.left_edge + static_cast<double>(s.m_cur) * delta;
  return lambda * analytic::psi_window_integral(s.t, s.left_edge, right);
}

inline std::vector<double> mu_transition_pmf(const MuChainState& s,
                                             double lambda, double delta,
                                             double tail_eps = 1e-12) {
  if (s.m_cur == 0) return {1.0};
  const double mean = mu_transition_mean(s, lambda, delta);
  std::vector<double> pmf;
  double cum = 0.0;
  for (long long k = 0;; ++k) {
    const double p = poisson_pmf(mean, k);
    pmf.push_back(p);
    cum += p;
    if (1.0 - cum < tail_eps && static_cast<double>(k) > mean) break;
  }
  return pmf;
}

// Mean one-step increment of f(mu) = m: lambda * sigma_hat(t, D) - m_cur.
inline double lyapunov_drift(const MuChainState& s, double lambda,
                             double delta) {
  return mu_transition_mean(s, lambda, delta) - static_cast<double>(s.m_cur);
}

// Smallest left edge at which the drift from (m_prev, m_cur) turns positive,
// located by scan plus bisection. Returns +inf when no crossing exists below
// left_max (e.g. in the subcritical regime, where drift stays negative).
inline double mu_drift_positive_threshold(double lambda, double delta,
                                          double t, long long m_cur,
                                          double left_max) {
  MuChainState s{1, m_cur, 0.0, t};
  auto drift_at = [&](double left) {
    s.left_edge = left;
    return lyapunov_drift(s, lambda, delta);
  };
  if (drift_at(0.0) > 0.0) return 0.0;
  const int steps = 256;
  double prev = 0.0;
  double found = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= steps; ++i) {
    const double left = left_max * i / steps;
    if (drift_at(left) > 0.0) {
      double lo = prev, hi = left;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (drift_at(mid) > 0.0 ? hi : lo) = mid;
      }
      found = hi;
      break;
    }
    prev = left;
  }
  return found;
}

// ---------------------------------------------------------------------------
// Conditional first-hit sampling: tau by inverse CDF, the field at tau by
// thinning a homogeneous Poisson field with acceptance psi(tau, y). Beyond
// 8 sqrt(tau) the rate factor is 1 to within 1e-15 and thinning stops.
// ---------------------------------------------------------------------------

inline double tau_sample(double lambda, RngStream& rng) {
  if (!(lambda > 0.0)) throw std::invalid_argument("tau_sample: lambda must be > 0");
  const double e = rng.exponential();
  const double root = e / (lambda * kSqrt2OverPi);
  return root * root;
}

struct TauFieldSample {
  double tau;
  std::vector<double> positions;
};

inline TauFieldSample tau_and_field_sample(double lambda, double right_edge,
                                           RngStream& rng) {
  if (!(right_edge > 0.0)) {
    throw std::invalid_argument("tau_and_field_sample: right_edge must be > 0");
  }
  TauFieldSample out;
  out.tau = tau_sample(lambda, rng);
  const double no_thin_from = 8.0 * std::sqrt(out.tau);
  auto raw = sampling::poisson_field(lambda, 0.0, right_edge, rng);
  out.positions.reserve(raw.size());
  for (double y : raw) {
    if (y >= no_thin_from || rng.u01() < analytic::survivor_rate(out.tau, y)) {
      out.positions.push_back(y);
    }
  }
  return out;
}

// Drive the interval recursion on sampled (tau, field) pairs and report how
// often the cumulative count escapes past `threshold` before absorbing.
// A strictly positive fraction at lambda*delta > 1 witnesses explosion.
inline double mu_chain_escape_fraction(double lambda, double delta,
                                       long long replicas, long long threshold,
                                       std::uint64_t seed) {
  long long escaped = 0;
  for (long long r = 0; r < replicas; ++r) {
    RngStream rng(seed, static_cast<std::uint32_t>(r), 0);
    const double tau = tau_sample(lambda, rng);
    const double no_thin_from = 8.0 * std::sqrt(tau);
    std::vector<double> pts;
    double generated_to = 0.0;
    const double chunk = 8.0 / lambda;
    auto extend_to = [&](double target) {
      while (generated_to < target) {
        auto raw = sampling::poisson_field(lambda, generated_to,
                                           generated_to + chunk, rng);
        for (double y : raw) {
          if (y >= no_thin_from ||
              rng.u01() < analytic::survivor_rate(tau, y)) {
            pts.push_back(y);
          }
        }
        generated_to += chunk;
      }
    };
    double left = 0.0;
    double len = delta; // first probe interval is [0, delta]
    long long total = 0;
    std::size_t cursor = 0;
    while (true) {
      const double right = left + len;
      extend_to(right);
      long long m = 0;
      while (cursor < pts.size() && pts[cursor] <= right) {
        ++m;
        ++cursor;
      }
      if (m == 0) break; // absorbed: the jump recurrence closed
      total += m;
      if (total >= threshold) {
        ++escaped;
        break;
      }
      left = right;
      len = static_cast<double>(m) * delta;
    }
  }
  return static_cast<double>(escaped) / static_cast<double>(replicas);
}

} // namespace accrete::chains
