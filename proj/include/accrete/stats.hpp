#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "accrete/core.hpp"
#include "accrete/normal.hpp"
#include "accrete/params.hpp"

// Estimators and hypothesis tests that turn replica outputs into verdicts.
// Everything is a pure fold over its inputs, aggregated in replica order so
// results cannot depend on scheduling.

namespace accrete::stats {

inline constexpr double kZ95 = 1.9599639845400545;  // two-sided 95%
inline constexpr double kZ99 = 2.5758293035489007;  // two-sided 99%
inline constexpr double kZ99OneSided = 2.3263478740408408;

// ---------------------------------------------------------------------------
// Special functions.
// ---------------------------------------------------------------------------

// Regularized upper incomplete gamma Q(a, x): series for x < a+1, Lentz
// continued fraction beyond, each evaluated on its well-conditioned side.
inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < 1000; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return 1.0 - sum * std::exp(log_prefactor);
  }
  double b = x + 1.0 - a;
  double c = 1e308;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double delt = d * c;
    h *= delt;
    if (std::abs(delt - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefactor) * h;
}

inline double chi2_sf(double x, double df) { return gamma_q(0.5 * df, 0.5 * x); }

// Kolmogorov limiting distribution Q(lam) = 2 sum (-1)^{j-1} e^{-2 j^2 lam^2},
// with the theta-dual form below lam ~ 1.18 where the direct series is slow.
inline double kolmogorov_q(double lam) {
  if (lam <= 0.0) return 1.0;
  if (lam < 1.18) {
    const double pi2 = 9.8696044010893586188;
    const double x = std::exp(-pi2 / (8.0 * lam * lam));
    const double x9 = std::pow(x, 9.0);
    const double p = std::sqrt(2.0 * 3.14159265358979323846) / lam *
                     (x + x9 + std::pow(x, 25.0) + std::pow(x, 49.0));
    return std::max(0.0, 1.0 - p);
  }
  double q = 0.0;
  for (int j = 1; j <= 100; ++j) {
    double term = 2.0 * std::exp(-2.0 * static_cast<double>(j) * j * lam * lam);
    if (j % 2 == 0) term = -term;
    q += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Basic estimates.
// ---------------------------------------------------------------------------

struct MeanCI {
  double mean = 0.0;
  double stderr_ = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
  bool degenerate = false; // fewer than two observations
};

inline MeanCI mean_ci(std::span<const double> xs, double z = kZ95) {
  MeanCI out;
  out.n = xs.size();
  if (xs.empty()) {
    out.degenerate = true;
    return out;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) {
    out.degenerate = true;
    out.lo = out.hi = out.mean;
    return out;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  out.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
  out.lo = out.mean - z * out.stderr_;
  out.hi = out.mean + z * out.stderr_;
  return out;
}

struct WilsonCI {
  double fraction = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

inline WilsonCI wilson_ci(long long successes, long long n, double z = kZ99) {
  if (n <= 0) throw std::invalid_argument("wilson_ci: n must be > 0");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

// ---------------------------------------------------------------------------
// Goodness-of-fit machinery.
// ---------------------------------------------------------------------------

// One-sample Kolmogorov-Smirnov against a fully specified CDF, asymptotic
// p-value with the Stephens small-sample correction.
inline double ks_pvalue(std::vector<double> samples,
                        const std::function<double(double)>& cdf,
                        double* d_out = nullptr) {
  if (samples.size() < 8) throw std::invalid_argument("ks_pvalue: too few samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  if (d_out != nullptr) *d_out = d;
  const double rn = std::sqrt(n);
  return kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
}

// Two-sample KS on possibly heavily tied data; the statistic is evaluated
// after consuming every copy of each distinct value, which is the correct
// step-function distance. Ties make the asymptotic p-value conservative.
inline double ks2_pvalue(std::vector<double> a, std::vector<double> b,
                         double* d_out = nullptr) {
  if (a.size() < 8 || b.size() < 8) {
    throw std::invalid_argument("ks2_pvalue: too few samples");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    const double v = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i]
                                                                       : b[j];
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  if (d_out != nullptr) *d_out = d;
  const double ne = std::sqrt(na * nb / (na + nb));
  return kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
}

namespace detail {

// Greedy pooling of Poisson(mean) cells into bins with expected count >= 5;
// whatever tail probability remains joins the last bin.
inline void poisson_bins(double mean, double n, std::vector<long long>& edges,
                         std::vector<double>& expected) {
  edges.clear();
  expected.clear();
  double tail = 1.0; // P(X >= k)
  double pmf = std::exp(-mean);
  long long k = 0;
  double acc = 0.0;
  while (tail * n >= 5.0) {
    acc += pmf * n;
    if (acc >= 5.0) {
      edges.push_back(k); // bin covers values <= k (and > previous edge)
      expected.push_back(acc);
      acc = 0.0;
    }
    tail -= pmf;
    ++k;
    pmf *= mean / static_cast<double>(k);
    if (k > 10'000'000) throw std::logic_error("poisson_bins: runaway loop");
  }
  const double tail_expected = acc + tail * n;
  if (!expected.empty()) {
    edges.back() = std::numeric_limits<long long>::max();
    expected.back() += tail_expected;
  } else {
    edges.push_back(std::numeric_limits<long long>::max());
    expected.push_back(tail_expected);
  }
}

} // namespace detail

// Chi-square goodness of fit of count data against Poisson(mean) with
// tail-bin pooling; the mean is given, not estimated, so df = bins - 1.
inline double poisson_gof_pvalue(std::span<const long long> counts, double mean,
                                 double* stat_out = nullptr) {
  if (counts.size() < 100) {
    throw std::invalid_argument("poisson_gof: need at least 100 samples");
  }
  if (!(mean > 0.0)) throw std::invalid_argument("poisson_gof: mean must be > 0");
  std::vector<long long> edges;
  std::vector<double> expected;
  detail::poisson_bins(mean, static_cast<double>(counts.size()), edges, expected);
  if (edges.size() < 2) {
    throw std::invalid_argument("poisson_gof: degenerate binning");
  }
  std::vector<double> observed(edges.size(), 0.0);
  for (long long c : counts) {
    const auto it = std::lower_bound(edges.begin(), edges.end(), c);
    observed[static_cast<std::size_t>(it - edges.begin())] += 1.0;
  }
  double stat = 0.0;
  for (std::size_t b = 0; b < edges.size(); ++b) {
    const double diff = observed[b] - expected[b];
    stat += diff * diff / expected[b];
  }
  if (stat_out != nullptr) *stat_out = stat;
  return chi2_sf(stat, static_cast<double>(edges.size() - 1));
}

struct IndependenceResult {
  double p_value = 0.0;
  double chi2 = 0.0;
  double correlation = 0.0;
  double corr_lo = 0.0;
  double corr_hi = 0.0;
};

namespace detail {

inline std::vector<long long> marginal_edges(std::span<const long long> values,
                                             double min_count) {
  long long max_v = 0;
  for (long long v : values) max_v = std::max(max_v, v);
  std::vector<double> hist(static_cast<std::size_t>(max_v) + 1, 0.0);
  for (long long v : values) hist[static_cast<std::size_t>(v)] += 1.0;
  std::vector<long long> edges;
  double acc = 0.0;
  for (long long k = 0; k <= max_v; ++k) {
    acc += hist[static_cast<std::size_t>(k)];
    if (acc >= min_count) {
      edges.push_back(k);
      acc = 0.0;
    }
  }
  if (edges.empty()) {
    edges.push_back(std::numeric_limits<long long>::max());
  } else {
    edges.back() = std::numeric_limits<long long>::max();
  }
  return edges;
}

} // namespace detail

// Chi-square independence test on the contingency table of pooled count
// bins, plus the sample correlation with its Fisher-z interval.
inline IndependenceResult independence_test(
    std::span<const std::pair<long long, long long>> pairs) {
  if (pairs.size() < 100) {
    throw std::invalid_argument("independence_test: need at least 100 pairs");
  }
  const double n = static_cast<double>(pairs.size());
  std::vector<long long> xs(pairs.size()), ys(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    xs[i] = pairs[i].first;
    ys[i] = pairs[i].second;
  }
  const double min_marginal = std::max(25.0, std::sqrt(5.0 * n));
  const auto ex = detail::marginal_edges(xs, min_marginal);
  const auto ey = detail::marginal_edges(ys, min_marginal);
  if (ex.size() < 2 || ey.size() < 2) {
    throw std::invalid_argument("independence_test: table too sparse to pool");
  }
  auto bin_of = [](const std::vector<long long>& edges, long long v) {
    return static_cast<std::size_t>(
        std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
  };
  std::vector<double> table(ex.size() * ey.size(), 0.0);
  std::vector<double> row(ex.size(), 0.0), col(ey.size(), 0.0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::size_t bx = bin_of(ex, xs[i]);
    const std::size_t by = bin_of(ey, ys[i]);
    table[bx * ey.size() + by] += 1.0;
    row[bx] += 1.0;
    col[by] += 1.0;
  }
  IndependenceResult out;
  for (std::size_t r = 0; r < ex.size(); ++r) {
    for (std::size_t c = 0; c < ey.size(); ++c) {
      const double expect = row[r] * col[c] / n;
      if (expect <= 0.0) continue;
      const double diff = table[r * ey.size() + c] - expect;
      out.chi2 += diff * diff / expect;
    }
  }
  const double df =
      static_cast<double>((ex.size() - 1) * (ey.size() - 1));
  out.p_value = chi2_sf(out.chi2, df);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    mx += static_cast<double>(xs[i]);
    my += static_cast<double>(ys[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double dx = static_cast<double>(xs[i]) - mx;
    const double dy = static_cast<double>(ys[i]) - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  out.correlation = sxy / std::sqrt(sxx * syy);
  const double z = std::atanh(std::clamp(out.correlation, -0.999999, 0.999999));
  const double half = kZ95 / std::sqrt(n - 3.0);
  out.corr_lo = std::tanh(z - half);
  out.corr_hi = std::tanh(z + half);
  return out;
}

// ---------------------------------------------------------------------------
// Replica aggregation.
// ---------------------------------------------------------------------------

// Replica outputs in replica order plus the shared parameters. Merging is
// concatenation; estimators fold in index order, so any grouping of a
// replica range produces identical aggregates.
template <class T>
struct ReplicaSet {
  SystemParams params;
  std::vector<T> items;

  void merge(ReplicaSet<T>&& other) {
    items.insert(items.end(), std::make_move_iterator(other.items.begin()),
                 std::make_move_iterator(other.items.end()));
  }
};

struct SpeedEstimate {
  MeanCI v_hat;        // mean of xi(T)/T
  MeanCI two_point;    // (xi(T) - xi(T/2)) / (T/2), transient cancelled
  long long exploded_excluded = 0;
};

// Mean boundary speed against the asymptotic prediction. Exploded replicas
// are excluded and counted; in the subcritical regime they indicate a bug
// and abort instead.
inline SpeedEstimate estimate_speed(const ReplicaSet<Trajectory>& reps) {
  const double T = reps.params.horizon;
  std::vector<double> per_t;
  std::vector<double> slopes;
  long long exploded = 0;
  for (const auto& traj : reps.items) {
    if (traj.exploded) {
      ++exploded;
      continue;
    }
    per_t.push_back(traj.xi_final / T);
    const SamplePoint* half = nullptr;
    for (const auto& s : traj.samples) {
      if (half == nullptr ||
          std::abs(s.t - 0.5 * T) < std::abs(half->t - 0.5 * T)) {
        half = &s;
      }
    }
    if (half != nullptr && half->t < T) {
      slopes.push_back((traj.xi_final - half->xi) / (T - half->t));
    }
  }
  if (exploded > 0 && reps.params.subcritical()) {
    throw std::logic_error(
        "estimate_speed: exploded replica in the subcritical regime");
  }
  SpeedEstimate out;
  out.v_hat = mean_ci(per_t);
  out.two_point = mean_ci(slopes);
  out.exploded_excluded = exploded;
  return out;
}

struct RatioPoint {
  double t = 0.0;
  MeanCI ratio; // mean N(t) / sqrt(t) with CI
};

struct SqrtRatioResult {
  std::vector<RatioPoint> curve;
  double reference = 0.0;      // lambda * sqrt(2/pi)
  double z_lower = 0.0;        // one-sided z of curve end vs reference
  bool lower_bound_exceeded = false;
  double stability_spread = 0.0; // max/min of the ratio over the last decade
};

inline SqrtRatioResult estimate_sqrt_ratio(const ReplicaSet<Trajectory>& reps,
                                           double one_sided_z = kZ99OneSided) {
  if (reps.items.empty()) {
    throw std::invalid_argument("estimate_sqrt_ratio: no replicas");
  }
  for (const auto& traj : reps.items) {
    if (traj.exploded && reps.params.subcritical()) {
      throw std::logic_error(
          "estimate_sqrt_ratio: exploded replica in the subcritical regime");
    }
  }
  const auto& grid_ref = reps.items.front().samples;
  SqrtRatioResult out;
  out.reference = reps.params.lambda * kSqrt2OverPi;
  out.curve.resize(grid_ref.size());
  std::vector<double> scratch(reps.items.size());
  for (std::size_t j = 0; j < grid_ref.size(); ++j) {
    const double t = grid_ref[j].t;
    for (std::size_t r = 0; r < reps.items.size(); ++r) {
      const auto& s = reps.items[r].samples;
      if (s.size() != grid_ref.size() || s[j].t != t) {
        throw std::invalid_argument(
            "estimate_sqrt_ratio: replicas must share the output grid");
      }
      scratch[r] = static_cast<double>(s[j].n) / std::sqrt(t);
    }
    out.curve[j] = {t, mean_ci(scratch)};
  }
  const auto& last = out.curve.back();
  out.z_lower = (last.ratio.mean - out.reference) / last.ratio.stderr_;
  out.lower_bound_exceeded = out.z_lower > one_sided_z;
  const double t_end = out.curve.back().t;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& pt : out.curve) {
    if (pt.t >= 0.1 * t_end) {
      lo = std::min(lo, pt.ratio.mean);
      hi = std::max(hi, pt.ratio.mean);
    }
  }
  out.stability_spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return out;
}

struct ExplosionEstimate {
  WilsonCI ci;
  long long exploded = 0;
  long long total = 0;
  bool positive_with_confidence = false;
};

inline ExplosionEstimate explosion_frequency(const ReplicaSet<Trajectory>& reps,
                                             double z = kZ99) {
  ExplosionEstimate out;
  out.total = static_cast<long long>(reps.items.size());
  for (const auto& traj : reps.items) {
    if (traj.exploded) ++out.exploded;
  }
  out.ci = wilson_ci(out.exploded, out.total, z);
  out.positive_with_confidence = out.ci.lo > 0.0;
  return out;
}

} // namespace accrete::stats
