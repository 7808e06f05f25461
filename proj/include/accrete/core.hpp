#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace accrete {

// ---------------------------------------------------------------------------
// Boundary jump recurrence.
//
// At a hit, the boundary advances by the minimal k > 0 such that the
// interval (xi, xi + k delta] holds at most k - 1 particles; those are
// swallowed along with the hitter. By minimality the swallowed count equals
// exactly k - 1.
// ---------------------------------------------------------------------------

struct JumpScan {
  enum class Status { found, need_frontier, exploded };
  Status status = Status::found;
  long long k = 0;
  std::size_t swallowed_count = 0;  // leading entries of the scanned span
  double required_frontier = 0.0;   // set when status == need_frontier
};

// Scan over survivor positions sorted ascending, all > xi. `frontier` is the
// coordinate up to which the configuration is fully known; a candidate whose
// interval pokes past it cannot be decided and is reported back so the
// caller can materialize more of the field. Candidate k may jump straight to
// count+1: any k with fewer slots than already-counted particles is dead.
inline JumpScan jump_size_scan(double xi, double delta,
                               std::span<const double> sorted_positions,
                               double frontier, long long k_budget) {
  if (!(delta > 0.0)) throw std::invalid_argument("jump_size: delta must be > 0");
  std::size_t idx = 0;
  long long k = 1;
  while (true) {
    if (k > k_budget) {
      return {JumpScan::Status::exploded, k, 0, 0.0};
    }
    const double right = xi + static_cast<double>(k) * delta;
    if (right > frontier) {
      return {JumpScan::Status::need_frontier, k, 0, right};
    }
    while (idx < sorted_positions.size() && sorted_positions[idx] <= right) {
      ++idx;
    }
    const long long count = static_cast<long long>(idx);
    if (count <= k - 1) {
      return {JumpScan::Status::found, k, idx, 0.0};
    }
    k = count + 1;
  }
}

struct JumpResult {
  long long k;
  std::vector<double> swallowed;
};

// Convenience form for a fully known finite survivor set (the infinite
// frontier). Returns nullopt when the budget is exhausted.
inline std::optional<JumpResult> jump_size(
    double xi, std::span<const double> survivors, double delta,
    long long k_budget = std::numeric_limits<long long>::max()) {
  for (double p : survivors) {
    if (!(p > xi)) throw std::invalid_argument("jump_size: survivors must be > xi");
  }
  const JumpScan scan = jump_size_scan(xi, delta, survivors,
                                       std::numeric_limits<double>::infinity(),
                                       k_budget);
  if (scan.status == JumpScan::Status::exploded) return std::nullopt;
  JumpResult r;
  r.k = scan.k;
  r.swallowed.assign(survivors.begin(),
                     survivors.begin() + static_cast<std::ptrdiff_t>(scan.swallowed_count));
  return r;
}

// ---------------------------------------------------------------------------
// Conservation ledger.
// ---------------------------------------------------------------------------

struct JumpRecord {
  double t;
  long long k; // 0 marks a frozen-boundary hit (the boundary does not move)
  double hitter_origin;
};

struct SamplePoint {
  double t;
  double xi;
  long long n;  // cumulative absorbed
  long long n0; // absorbed whose initial position is <= current xi
  long long n1; // absorbed whose initial position is > current xi
};

struct Trajectory {
  std::vector<SamplePoint> samples;
  std::vector<JumpRecord> jumps;
  bool exploded = false;
  double truncation_bound = 0.0;
  double xi_final = 0.0;
  long long n_final = 0;
  std::uint64_t endpoint_table_fallbacks = 0;
  std::uint64_t fpt_tie_breaks = 0;

  long long absorbed_at(double t) const {
    long long n = 0;
    for (const auto& j : jumps) {
      if (j.t > t) break;
      n += j.k > 0 ? j.k : 1;
    }
    return n;
  }
};

// Maintains xi = delta * N and the absorbed-origin list event by event; the
// n0/n1 split is classified lazily at sample time against the boundary value
// current then. Violations are programming errors, not data.
class Bookkeeper {
 public:
  Bookkeeper(double delta, bool frozen) : delta_(delta), frozen_(frozen) {}

  void apply_event(double t, long long k, double hitter_origin,
                   std::span<const double> swallowed_origins) {
    if (frozen_) throw std::logic_error("ledger: jump event in frozen mode");
    if (k <= 0) throw std::logic_error("ledger: jump with k <= 0");
    if (!(t > last_t_) && !jumps_.empty()) {
      throw std::logic_error("ledger: jump times must be strictly increasing");
    }
    if (static_cast<long long>(swallowed_origins.size()) != k - 1) {
      throw std::logic_error("ledger: swallowed count must equal k - 1");
    }
    n_absorbed_ += k;
    xi_ = delta_ * static_cast<double>(n_absorbed_);
    jumps_.push_back({t, k, hitter_origin});
    absorbed_origins_.push_back(hitter_origin);
    absorbed_origins_.insert(absorbed_origins_.end(), swallowed_origins.begin(),
                             swallowed_origins.end());
    last_t_ = t;
  }

  void apply_hit(double t, double origin) {
    if (!frozen_) throw std::logic_error("ledger: bare hit in moving mode");
    if (!(t > last_t_) && !jumps_.empty()) {
      throw std::logic_error("ledger: hit times must be strictly increasing");
    }
    n_absorbed_ += 1;
    jumps_.push_back({t, 0, origin});
    absorbed_origins_.push_back(origin);
    last_t_ = t;
  }

  SamplePoint sample(double t) const {
    const long long n0 = static_cast<long long>(
        std::count_if(absorbed_origins_.begin(), absorbed_origins_.end(),
                      [&](double o) { return o <= xi_; }));
    return {t, xi_, n_absorbed_, n0, n_absorbed_ - n0};
  }

  double xi() const { return xi_; }
  long long absorbed() const { return n_absorbed_; }
  double last_event_time() const { return last_t_; }
  const std::vector<JumpRecord>& jumps() const { return jumps_; }
  std::vector<JumpRecord>&& take_jumps() { return std::move(jumps_); }

 private:
  double delta_;
  bool frozen_;
  double xi_ = 0.0;
  long long n_absorbed_ = 0;
  double last_t_ = -std::numeric_limits<double>::infinity();
  std::vector<JumpRecord> jumps_;
  std::vector<double> absorbed_origins_;
};

// ---------------------------------------------------------------------------
// Deterministic toy model: particles on the lattice {k / lambda} moving at
// constant speed v. N(t) is the smallest fixed point of
//   N = floor(N delta lambda) + floor(lambda v t),
// reached by monotone iteration from N = floor(lambda v t).
// ---------------------------------------------------------------------------

inline long long deterministic_toy_count(double lambda, double delta, double v,
                                         double t) {
  if (!(lambda > 0.0 && delta > 0.0)) {
    throw std::invalid_argument("toy model: lambda and delta must be > 0");
  }
  if (!(lambda * delta < 1.0)) {
    throw std::invalid_argument("toy model: lambda*delta must be < 1");
  }
  if (!(v > 0.0)) throw std::invalid_argument("toy model: drift must be > 0");
  if (t < 0.0) throw std::invalid_argument("toy model: t must be >= 0");
  const long long inflow = static_cast<long long>(std::floor(lambda * v * t));
  long long n = inflow;
  while (true) {
    const long long next =
        static_cast<long long>(std::floor(static_cast<double>(n) * delta * lambda)) +
        inflow;
    if (next == n) return n;
    n = next;
  }
}

} // namespace accrete
