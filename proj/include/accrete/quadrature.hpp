#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

// Adaptive Gauss-Kronrod (G7/K15) quadrature with a rational substitution
// for semi-infinite upper limits. Tolerances are absolute; the default
// matches what the analytic layer promises downstream.

namespace accrete::quadrature {

namespace detail {

// QUADPACK G7/K15 nodes and weights (positive half, node 7 is the center).
inline constexpr double kNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
inline constexpr double kWeightsK[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kWeightsG[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <class F>
inline void gauss_kronrod_15(const F& f, double a, double b, double& value,
                             double& error) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(mid - half * kNodes[i]);
    fv[14 - i] = f(mid + half * kNodes[i]);
  }
  fv[7] = f(mid);
  double sum_k = kWeightsK[7] * fv[7];
  double sum_g = kWeightsG[3] * fv[7];
  for (int i = 0; i < 7; ++i) {
    sum_k += kWeightsK[i] * (fv[i] + fv[14 - i]);
    if (i % 2 == 1) {
      sum_g += kWeightsG[i / 2] * (fv[i] + fv[14 - i]);
    }
  }
  value = sum_k * half;
  error = std::abs((sum_k - sum_g) * half);
}

struct Interval {
  double a, b, value, error;
};

} // namespace detail

struct Result {
  double value;
  double error;
  bool converged;
};

// Adaptive bisection on [a, b]: split the worst interval until the summed
// error estimate drops below abs_tol or the interval budget runs out.
template <class F>
inline Result integrate(const F& f, double a, double b,
                        double abs_tol = 1e-10, std::size_t max_intervals = 4096) {
  if (!(a <= b)) throw std::invalid_argument("quadrature: empty interval");
  if (a == b) return {0.0, 0.0, true};
  std::vector<detail::Interval> heap;
  heap.reserve(128);
  detail::Interval root{a, b, 0.0, 0.0};
  detail::gauss_kronrod_15(f, a, b, root.value, root.error);
  heap.push_back(root);
  auto cmp = [](const detail::Interval& x, const detail::Interval& y) {
    return x.error < y.error;
  };
  double total_error = root.error;
  while (total_error > abs_tol && heap.size() < max_intervals) {
    std::pop_heap(heap.begin(), heap.end(), cmp);
    detail::Interval worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) { // interval is at double resolution
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end(), cmp);
      break;
    }
    detail::Interval left{worst.a, mid, 0.0, 0.0};
    detail::Interval right{mid, worst.b, 0.0, 0.0};
    detail::gauss_kronrod_15(f, left.a, left.b, left.value, left.error);
    detail::gauss_kronrod_15(f, right.a, right.b, right.value, right.error);
    total_error += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), cmp);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), cmp);
  }
  double value = 0.0;
  double error = 0.0;
  for (const auto& iv : heap) {
    value += iv.value;
    error += iv.error;
  }
  return {value, error, error <= abs_tol};
}

// Integral over [a, inf) via x = a + u/(1-u); the Kronrod nodes are interior
// so the integrand is never evaluated at the singular endpoint.
template <class F>
inline Result integrate_to_inf(const F& f, double a, double abs_tol = 1e-10,
                               std::size_t max_intervals = 4096) {
  auto g = [&](double u) {
    const double one_minus = 1.0 - u;
    const double x = a + u / one_minus;
    const double jac = 1.0 / (one_minus * one_minus);
    return f(x) * jac;
  };
  return integrate(g, 0.0, 1.0, abs_tol, max_intervals);
}

} // namespace accrete::quadrature
