#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "accrete/analytic.hpp"
#include "accrete/normal.hpp"
#include "accrete/quadrature.hpp"
#include "accrete/rng.hpp"

using namespace accrete;
using Catch::Approx;

namespace {

// Reference values computed independently with 30-digit arithmetic.
constexpr double kPhi1 = 0.84134474606854294859;
constexpr double kTwoPhiBar1 = 0.31731050786291410283;
constexpr double kTail211 = 0.23235718919184303999;
constexpr double kFirstHit11 = 0.24197072451914334980;
constexpr double kKernel111 = 0.34495131388824462599;
constexpr double kPsi42 = 0.68268949213708589717;
constexpr double kTauDenHalfPi = 0.11709966304863832138;
constexpr double kTauMedian1 = 0.75469382946024813886;
constexpr double kSigmaConst1 = 0.36874638037250724089;
constexpr double kSigmaConst02 = 0.015904710923687609355;
constexpr double kSigmaConst2 = 1.2190968444307939192;
constexpr double kLogPhiM10 = -53.231285150512470578;
constexpr double kLogPhiM20 = -203.91715537109726394;
constexpr double kLogPhiM40 = -804.60844201375378817;
constexpr double kIntPhiBar6 = 1.5635697959709664279e-10;

} // namespace

TEST_CASE("standard normal basics") {
  CHECK(normal_cdf(0.0) == Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.0) == Approx(kPhi1).epsilon(1e-14));
  CHECK(normal_pdf(0.0) == Approx(kInvSqrt2Pi).epsilon(1e-15));
  for (double z : {-6.0, -2.0, -0.5, 0.0, 0.7, 3.0, 8.0}) {
    CHECK(normal_cdf(z) + normal_sf(z) == Approx(1.0).epsilon(1e-14));
  }
  // monotonicity
  double prev = 0.0;
  for (double z = -8.0; z <= 8.0; z += 0.25) {
    const double c = normal_cdf(z);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("log Phi agrees with the exact value and survives extremes") {
  CHECK(normal_logcdf(-10.0) == Approx(kLogPhiM10).epsilon(1e-13));
  CHECK(normal_logcdf(-20.0) == Approx(kLogPhiM20).epsilon(1e-13));
  CHECK(normal_logcdf(-40.0) == Approx(kLogPhiM40).epsilon(1e-13));
  CHECK(normal_logcdf(-1.0) == Approx(std::log(normal_cdf(-1.0))).epsilon(1e-14));
  // both sides of the series switch against 40-digit references
  CHECK(normal_logcdf(-29.999999) ==
        Approx(-454.32121392308402912).epsilon(1e-13));
  CHECK(normal_logcdf(-30.000001) ==
        Approx(-454.32127398960336399).epsilon(1e-13));
  CHECK(std::isfinite(normal_logcdf(-700.0)));
}

TEST_CASE("max_drifted_bm_tail closed form") {
  CHECK(analytic::max_drifted_bm_tail(0.0, 0.0, 1.0) == 1.0);
  CHECK(analytic::max_drifted_bm_tail(0.0, 3.0, 0.5) == 1.0);
  CHECK(analytic::max_drifted_bm_tail(1.0, 0.0, 1.0) ==
        Approx(kTwoPhiBar1).epsilon(1e-13));
  CHECK(analytic::max_drifted_bm_tail(2.0, 1.0, 1.0) ==
        Approx(kTail211).epsilon(1e-12));
  CHECK_THROWS_AS(analytic::max_drifted_bm_tail(1.0, 0.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(analytic::max_drifted_bm_tail(-1.0, 0.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("max_drifted_bm_tail equals 2 PhiBar at zero drift") {
  for (double t : {0.25, 1.0, 9.0}) {
    for (double ratio : {0.1, 0.5, 1.0, 2.0, 4.0, 8.0}) {
      const double x = ratio * std::sqrt(t);
      const double expect = 2.0 * normal_sf(ratio);
      CHECK(analytic::max_drifted_bm_tail(x, 0.0, t) ==
            Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("max_drifted_bm_tail monotone and safe at extreme drift products") {
  double prev = 2.0;
  for (double x = 0.0; x <= 40.0; x += 0.5) {
    const double p = analytic::max_drifted_bm_tail(x, 1.0, 1.0);
    CHECK(p <= prev + 1e-15);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    prev = p;
  }
  // v*x up to 700 in log units must not overflow or go NaN
  for (double v : {1.0, 10.0, 50.0}) {
    for (double x : {1.0, 14.0, 700.0 / v}) {
      const double p = analytic::max_drifted_bm_tail(x, v, 2.0);
      CHECK(std::isfinite(p));
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
}

TEST_CASE("max_drifted_bm_tail against a bridge-corrected Monte Carlo oracle") {
  // Independent oracle: simulate the discretized path and accumulate the
  // within-step crossing probability via the Brownian bridge, which removes
  // the discrete-maximum bias. 40k paths, step 2e-3.
  const double x = 2.0, v = 1.0, t = 1.0;
  const int paths = 40000;
  const int steps = 500;
  const double h = t / steps;
  RngStream rng(0xBEEF, 0, 1);
  int crossed = 0;
  for (int p = 0; p < paths; ++p) {
    double w = 0.0;
    bool hit = false;
    for (int s = 0; s < steps && !hit; ++s) {
      const double w_new = w + v * h + std::sqrt(h) * rng.normal();
      if (w_new >= x) {
        hit = true;
      } else {
        const double p_bridge = std::exp(-2.0 * (x - w) * (x - w_new) / h);
        if (rng.u01() < p_bridge) hit = true;
      }
      w = w_new;
    }
    if (hit) ++crossed;
  }
  const double estimate = static_cast<double>(crossed) / paths;
  const double sigma = std::sqrt(kTail211 * (1.0 - kTail211) / paths);
  CHECK(std::abs(estimate - analytic::max_drifted_bm_tail(x, v, t)) <
        4.0 * sigma);
}

TEST_CASE("hit_prob_fixed limits") {
  CHECK(analytic::hit_prob_fixed(1.0, 0.0, 1.0) ==
        Approx(kTwoPhiBar1).epsilon(1e-13));
  CHECK(analytic::hit_prob_fixed(1e3, 0.0, 1.0) < 1e-100);
  CHECK(analytic::hit_prob_fixed(1e-9, 0.0, 1.0) == Approx(1.0).epsilon(1e-7));
  CHECK_THROWS_AS(analytic::hit_prob_fixed(0.0, 0.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("mean_fixed_hits closed form") {
  CHECK(analytic::mean_fixed_hits(1.0, 3.14159265358979323846 / 2.0) ==
        Approx(1.0).epsilon(1e-14));
  CHECK(analytic::mean_fixed_hits(0.5, 2.0 * 3.14159265358979323846) ==
        Approx(1.0).epsilon(1e-14));
  CHECK(analytic::mean_fixed_hits(2.0, 0.0) == 0.0);
}

TEST_CASE("first hit density values and shape") {
  CHECK(analytic::first_hit_density(1.0, 1.0) ==
        Approx(kFirstHit11).epsilon(1e-13));
  // argmax over t at t = x^2 / 3
  const double x = 1.7;
  const double t_star = x * x / 3.0;
  const double peak = analytic::first_hit_density(t_star, x);
  CHECK(peak > analytic::first_hit_density(t_star * 1.05, x));
  CHECK(peak > analytic::first_hit_density(t_star * 0.95, x));
  // integral over (0, T] matches the first-passage CDF
  for (double T : {0.5, 1.0, 4.0}) {
    const auto got = quadrature::integrate(
        [x](double t) { return analytic::first_hit_density(t, x); }, 1e-12, T,
        1e-12);
    CHECK(got.value == Approx(analytic::first_hit_cdf(T, x)).margin(1e-10));
  }
}

TEST_CASE("survivor kernel symmetry, value, normalization") {
  CHECK(analytic::survivor_kernel(1.0, 1.0, 1.0) ==
        Approx(kKernel111).epsilon(1e-13));
  for (double x : {0.3, 1.0, 2.5}) {
    for (double y : {0.4, 1.7}) {
      CHECK(analytic::survivor_kernel(0.7, x, y) ==
            Approx(analytic::survivor_kernel(0.7, y, x)).epsilon(1e-13));
      CHECK(analytic::survivor_kernel(0.7, x, y) >= 0.0);
    }
  }
  for (double t : {0.25, 1.0, 4.0}) {
    for (double x : {0.25, 1.0, 3.0}) {
      const auto got = quadrature::integrate_to_inf(
          [t, x](double y) { return analytic::survivor_kernel(t, x, y); }, 0.0,
          1e-11);
      CHECK(got.value == Approx(analytic::survivor_rate(t, x)).margin(1e-9));
      CHECK(got.value ==
            Approx(1.0 - analytic::hit_prob_fixed(x, 0.0, t)).margin(1e-9));
    }
  }
}

TEST_CASE("survivor kernel semigroup property") {
  for (double s : {0.5, 1.0}) {
    for (double t : {0.5, 2.0}) {
      const double x = 0.8, y = 1.3;
      const auto conv = quadrature::integrate_to_inf(
          [&](double z) {
            return analytic::survivor_kernel(s, x, z) *
                   analytic::survivor_kernel(t, z, y);
          },
          0.0, 1e-10);
      CHECK(conv.value ==
            Approx(analytic::survivor_kernel(s + t, x, y)).margin(1e-6));
    }
  }
}

TEST_CASE("survivor rate") {
  CHECK(analytic::survivor_rate(1.0, 0.0) == 0.0);
  CHECK(analytic::survivor_rate(4.0, 2.0) == Approx(kPsi42).epsilon(1e-13));
  CHECK(analytic::survivor_rate(1.0, 10.0) == Approx(1.0).margin(1e-15));
  double prev = -1.0;
  for (double y = 0.0; y < 5.0; y += 0.1) {
    const double r = analytic::survivor_rate(2.0, y);
    CHECK(r > prev);
    prev = r;
  }
}

TEST_CASE("tau law: density, CDF, median") {
  const double half_pi = 3.14159265358979323846 / 2.0;
  CHECK(analytic::tau_density(half_pi, 1.0) ==
        Approx(kTauDenHalfPi).epsilon(1e-13));
  CHECK(analytic::tau_median(1.0) == Approx(kTauMedian1).epsilon(1e-14));
  CHECK(analytic::tau_cdf(analytic::tau_median(2.5), 2.5) ==
        Approx(0.5).epsilon(1e-13));
  // normalization via t = u^2
  const auto got = quadrature::integrate_to_inf(
      [](double u) { return 2.0 * u * analytic::tau_density(u * u, 1.3); },
      1e-9, 1e-11);
  CHECK(got.value == Approx(1.0).margin(1e-9));
}

TEST_CASE("sigma constant") {
  CHECK(analytic::sigma_constant(1.0) == Approx(kSigmaConst1).margin(1e-10));
  CHECK(analytic::sigma_constant(0.2) == Approx(kSigmaConst02).margin(1e-10));
  CHECK(analytic::sigma_constant(2.0) == Approx(kSigmaConst2).margin(1e-10));
  CHECK(analytic::sigma_constant(1e-8) == Approx(0.0).margin(1e-10));
  CHECK(analytic::sigma_constant(2.0) > analytic::sigma_constant(1.0));
  // closed form: 2(x Phi(x) + phi(x)) - x evaluated at d minus at 0
  for (double d : {0.5, 1.0, 3.0}) {
    const double closed = 2.0 * (d * normal_cdf(d) + normal_pdf(d)) - d -
                          2.0 * normal_pdf(0.0);
    CHECK(analytic::sigma_constant(d) == Approx(closed).margin(1e-10));
  }
}

TEST_CASE("k0 mean composition") {
  CHECK(analytic::k0_mean(1.0, 1.0, 0.0) == 0.0);
  CHECK(analytic::k0_mean(1.0, 1.0, 4.0) ==
        Approx(2.0 * kSigmaConst1).margin(1e-9));
  CHECK(analytic::k0_mean(0.5, 0.2, 9.0) ==
        Approx(0.5 * kSigmaConst02 * 3.0).margin(1e-9));
}

TEST_CASE("asymptotic speed") {
  CHECK(analytic::asymptotic_speed(0.5, 1.0, 0.0) == 0.0);
  CHECK(analytic::asymptotic_speed(0.5, 1.0, 1.0) == Approx(1.0).epsilon(1e-15));
  CHECK(analytic::asymptotic_speed(0.9, 1.0, 2.0) ==
        Approx(18.0).epsilon(1e-12));
  CHECK_THROWS_AS(analytic::asymptotic_speed(1.0, 1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(analytic::asymptotic_speed(2.0, 1.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("truncation tail mass: closed form at zero drift") {
  // int_a^inf PhiBar(u) du = phi(a) - a PhiBar(a); the v = 0 mass is
  // 2 lambda sqrt(T) times that.
  for (double T : {1.0, 25.0}) {
    for (double a : {1.0, 3.0, 6.0}) {
      for (double lambda : {0.5, 2.0}) {
        const double frontier = 7.0 + a * std::sqrt(T);
        const double xi_max = 7.0;
        const double closed = 2.0 * lambda * std::sqrt(T) *
                              (normal_pdf(a) - a * normal_sf(a));
        const double got =
            analytic::truncation_tail_mass(frontier, xi_max, T, 0.0, lambda);
        CHECK(got == Approx(closed).margin(1e-10));
      }
    }
  }
  // the six-sigma window the engine margins lean on
  const double six_sigma = analytic::truncation_tail_mass(6.0, 0.0, 1.0, 0.0, 1.0);
  CHECK(six_sigma == Approx(2.0 * kIntPhiBar6).epsilon(1e-6));
  CHECK(six_sigma < 1.3e-9);
}

TEST_CASE("truncation tail mass: drift plateau and decrease in frontier") {
  // with drift, everything within v*T of the boundary is all but absorbed:
  // the mass from F = xi_max is close to lambda * v * T
  const double mass0 =
      analytic::truncation_tail_mass(1e-9, 0.0, 100.0, 2.0, 0.5);
  CHECK(mass0 > 0.5 * 2.0 * 100.0 * 0.98);
  double prev = mass0;
  for (double f : {50.0, 150.0, 220.0, 260.0}) {
    const double m = analytic::truncation_tail_mass(f, 0.0, 100.0, 2.0, 0.5);
    CHECK(m < prev);
    prev = m;
  }
  CHECK(analytic::truncation_tail_mass(2.0 * 100.0 + 10.0 * 10.0, 0.0, 100.0,
                                       2.0, 0.5) < 1e-6);
  CHECK_THROWS_AS(analytic::truncation_tail_mass(1.0, 2.0, 1.0, 0.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("psi window integral") {
  CHECK(analytic::psi_window_integral(1.0, 0.0, 1.0) ==
        Approx(kSigmaConst1).margin(1e-9)); // same integrand at t = 1
  CHECK(analytic::psi_window_integral(1.0, 0.0, 0.0) == 0.0);
  // beyond 8 sqrt(t) the rate factor is 1: window length exactly
  CHECK(analytic::psi_window_integral(1.0, 9.0, 14.0) ==
        Approx(5.0).margin(1e-12));
  // additivity across the seam
  const double whole = analytic::psi_window_integral(2.0, 0.5, 30.0);
  const double split = analytic::psi_window_integral(2.0, 0.5, 7.0) +
                       analytic::psi_window_integral(2.0, 7.0, 30.0);
  CHECK(whole == Approx(split).margin(1e-9));
}

TEST_CASE("quadrature sanity") {
  const auto one = quadrature::integrate([](double x) { return 2.0 * x; }, 0.0,
                                         1.0, 1e-12);
  CHECK(one.value == Approx(1.0).margin(1e-12));
  const auto gauss = quadrature::integrate_to_inf(
      [](double x) { return normal_pdf(x); }, 0.0, 1e-12);
  CHECK(gauss.value == Approx(0.5).margin(1e-10));
  const auto heavy = quadrature::integrate_to_inf(
      [](double x) { return std::exp(-x) * std::cos(x); }, 0.0, 1e-11);
  CHECK(heavy.value == Approx(0.5).margin(1e-9));
}
