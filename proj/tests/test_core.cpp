#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "accrete/analytic.hpp"
#include "accrete/core.hpp"
#include "accrete/field.hpp"
#include "accrete/params.hpp"
#include "accrete/rng.hpp"

using namespace accrete;
using Catch::Approx;

namespace {

// Brute-force oracle: try k = 1, 2, ... and count by direct scan.
long long jump_size_brute(double xi, const std::vector<double>& survivors,
                          double delta, long long k_max) {
  for (long long k = 1; k <= k_max; ++k) {
    long long count = 0;
    for (double p : survivors) {
      if (p > xi && p <= xi + static_cast<double>(k) * delta) ++count;
    }
    if (count <= k - 1) return k;
  }
  return -1;
}

} // namespace

TEST_CASE("jump size on the worked examples") {
  {
    const auto r = jump_size(0.0, std::vector<double>{}, 1.0);
    REQUIRE(r.has_value());
    CHECK(r->k == 1);
    CHECK(r->swallowed.empty());
  }
  {
    const std::vector<double> s{0.5, 1.5, 3.5};
    const auto r = jump_size(0.0, s, 1.0);
    REQUIRE(r.has_value());
    CHECK(r->k == 3);
    REQUIRE(r->swallowed.size() == 2);
    CHECK(r->swallowed[0] == 0.5);
    CHECK(r->swallowed[1] == 1.5);
  }
  {
    const std::vector<double> s{10.0};
    const auto r = jump_size(2.0, s, 1.0);
    REQUIRE(r.has_value());
    CHECK(r->k == 1);
    CHECK(r->swallowed.empty());
  }
}

TEST_CASE("interval convention is half-open on the left, closed on the right") {
  // a particle exactly at xi + k*delta counts inside
  const std::vector<double> s{1.0};
  const auto r = jump_size(0.0, s, 1.0);
  REQUIRE(r.has_value());
  CHECK(r->k == 2);
  REQUIRE(r->swallowed.size() == 1);
}

TEST_CASE("jump size against the brute-force oracle") {
  RngStream rng(0x10E, 0, 0);
  for (int trial = 0; trial < 400; ++trial) {
    const double xi = rng.u01() * 3.0;
    const double delta = 0.25 + rng.u01();
    const long long n = rng.poisson(8.0);
    std::vector<double> survivors;
    for (long long i = 0; i < n; ++i) {
      survivors.push_back(xi + rng.u01() * 12.0);
    }
    std::sort(survivors.begin(), survivors.end());
    const auto r = jump_size(xi, survivors, delta, 1'000'000);
    const long long brute = jump_size_brute(xi, survivors, delta, 1'000'000);
    REQUIRE(r.has_value());
    CHECK(r->k == brute);
    // minimality: the count at k is exactly k-1, every smaller j holds >= j
    CHECK(static_cast<long long>(r->swallowed.size()) == r->k - 1);
    for (long long j = 1; j < r->k; ++j) {
      long long count = 0;
      for (double p : survivors) {
        if (p > xi && p <= xi + static_cast<double>(j) * delta) ++count;
      }
      CHECK(count >= j);
    }
  }
}

TEST_CASE("jump size scan reports frontier demand and explosion") {
  const std::vector<double> s{0.5, 1.5};
  const auto need =
      jump_size_scan(0.0, 1.0, s, /*frontier=*/2.0, /*k_budget=*/100);
  CHECK(need.status == JumpScan::Status::need_frontier);
  CHECK(need.required_frontier == Approx(3.0));
  const auto boom = jump_size_scan(0.0, 1.0, s, 1e18, /*k_budget=*/2);
  CHECK(boom.status == JumpScan::Status::exploded);
  const auto blocked = jump_size(
      0.0, std::vector<double>{0.1, 0.15, 0.3, 0.35, 0.5, 0.55}, 0.2, 3);
  CHECK_FALSE(blocked.has_value());
}

TEST_CASE("ledger: single event and additivity") {
  Bookkeeper book(0.5, false);
  const std::vector<double> swallowed{0.3};
  book.apply_event(1.0, 2, 0.1, swallowed);
  CHECK(book.absorbed() == 2);
  CHECK(book.xi() == Approx(1.0));
  const std::vector<double> swallowed2{0.8, 1.2};
  book.apply_event(2.5, 3, 0.6, swallowed2);
  CHECK(book.absorbed() == 5);
  CHECK(book.xi() == 0.5 * 5); // exact product identity
  const auto s = book.sample(3.0);
  CHECK(s.n == 5);
  CHECK(s.n0 + s.n1 == s.n);
  CHECK(s.n0 == 5); // all origins <= 2.5
}

TEST_CASE("ledger: n0/n1 classification against the current boundary") {
  Bookkeeper book(1.0, false);
  // hitter origin far right of the final boundary stays in n1
  book.apply_event(1.0, 1, 5.0, {});
  auto s = book.sample(1.5);
  CHECK(s.n0 == 0);
  CHECK(s.n1 == 1);
  // once the boundary passes the origin the same absorption flips to n0
  const std::vector<double> sw{1.5, 2.5, 3.5, 4.5};
  book.apply_event(2.0, 5, 0.5, sw);
  s = book.sample(2.5);
  CHECK(book.xi() == Approx(6.0));
  CHECK(s.n0 == 6);
  CHECK(s.n1 == 0);
}

TEST_CASE("ledger rejects malformed events") {
  Bookkeeper book(1.0, false);
  const std::vector<double> one{0.5};
  CHECK_THROWS_AS(book.apply_event(1.0, 1, 0.1, one), std::logic_error);
  book.apply_event(1.0, 2, 0.1, one);
  CHECK_THROWS_AS(book.apply_event(1.0, 1, 0.2, {}), std::logic_error);
  CHECK_THROWS_AS(book.apply_hit(2.0, 0.2), std::logic_error);
  Bookkeeper frozen(1.0, true);
  frozen.apply_hit(0.5, 1.0);
  CHECK(frozen.xi() == 0.0);
  CHECK(frozen.absorbed() == 1);
  CHECK_THROWS_AS(frozen.apply_event(1.0, 1, 0.1, {}), std::logic_error);
}

TEST_CASE("toy model fixed point") {
  CHECK(deterministic_toy_count(0.5, 1.0, 1.0, 0.0) == 0);
  // iterating N <- floor(N/2) + 50 from 50 settles at 99
  CHECK(deterministic_toy_count(0.5, 1.0, 1.0, 100.0) == 99);
  const long long n = deterministic_toy_count(0.5, 1.0, 1.0, 100.0);
  CHECK(n == static_cast<long long>(std::floor(n * 0.5)) + 50);
  CHECK_THROWS_AS(deterministic_toy_count(1.0, 1.0, 1.0, 10.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(deterministic_toy_count(2.0, 1.0, 1.0, 10.0),
                  std::invalid_argument);
}

TEST_CASE("toy model converges to the asymptotic speed at rate O(1/t)") {
  const double lambda = 0.5, delta = 1.0, v = 1.0;
  const double speed = analytic::asymptotic_speed(lambda, delta, v);
  for (double t : {1e2, 1e3, 1e4}) {
    const double n = static_cast<double>(
        deterministic_toy_count(lambda, delta, v, t));
    CHECK(std::abs(n / t - speed) < 2.0 / t / (1.0 - lambda * delta));
  }
  // and for a second parameter set, cross-checked against the formula slope
  const double rho_speed = analytic::asymptotic_speed(0.9, 1.0, 2.0);
  const double n = static_cast<double>(
      deterministic_toy_count(0.9, 1.0, 2.0, 1e4));
  CHECK(n / 1e4 == Approx(rho_speed).epsilon(0.01));
}

TEST_CASE("particle field: lazy extension never rewrites the prefix") {
  ParticleField a(1.3, 99, 0);
  ParticleField b(1.3, 99, 0);
  a.extend_to(5.0);
  const std::vector<double> prefix(a.positions().begin(), a.positions().end());
  a.extend_to(40.0);
  b.extend_to(40.0);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.positions()[i] == b.positions()[i]);
  }
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    CHECK(a.positions()[i] == prefix[i]);
  }
  CHECK(a.frontier() >= 40.0);
}

TEST_CASE("particle field: strict order, range, density") {
  ParticleField f(2.0, 7, 3);
  f.extend_to(200.0);
  const auto pts = f.positions();
  REQUIRE(!pts.empty());
  CHECK(pts.front() > 0.0);
  CHECK(pts.back() <= f.frontier());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    REQUIRE(pts[i] > pts[i - 1]);
  }
  const double mean = 2.0 * f.frontier();
  CHECK(std::abs(static_cast<double>(pts.size()) - mean) <
        4.0 * std::sqrt(mean));
}

TEST_CASE("params validation names the violated invariant") {
  SystemParams p;
  p.lambda = 2.0;
  p.delta = 1.0;
  CHECK_THROWS_WITH(p.validate(), Catch::Matchers::ContainsSubstring("lambda*delta"));
  p.explosion_cap_explicit = true;
  CHECK_NOTHROW(p.validate());
  p.lambda = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  SystemParams q;
  q.horizon = 0.0;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}

TEST_CASE("config hash tracks every field") {
  SystemParams p;
  const auto h0 = config_hash(p);
  SystemParams q = p;
  q.seed = 1;
  CHECK(config_hash(q) != h0);
  q = p;
  q.drift = 0.25;
  CHECK(config_hash(q) != h0);
  q = p;
  q.engine = EngineKind::grid;
  CHECK(config_hash(q) != h0);
  CHECK(config_hash(p) == h0);
}

TEST_CASE("default output grid is geometric and ends at the horizon") {
  const auto g = default_output_grid(400.0);
  CHECK(g.size() == 64);
  CHECK(g.back() == 400.0);
  CHECK(g.front() == Approx(4.0));
  for (std::size_t i = 1; i < g.size(); ++i) REQUIRE(g[i] > g[i - 1]);
}
