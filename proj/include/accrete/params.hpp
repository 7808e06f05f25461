#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace accrete {

enum class EngineKind { event, grid };
enum class BoundaryMode { moving, frozen };

inline const char* to_string(EngineKind k) {
  return k == EngineKind::event ? "event" : "grid";
}
inline const char* to_string(BoundaryMode m) {
  return m == BoundaryMode::moving ? "moving" : "frozen";
}

// The full parameterization of one run. Everything an engine needs is here;
// a (params, replica) pair determines a trajectory bit-for-bit.
struct SystemParams {
  double lambda = 1.0;       // particle density per unit length
  double delta = 1.0;        // particle size
  double drift = 0.0;        // leftward drift v >= 0
  double horizon = 1.0;      // run length T
  double trunc_epsilon = 1e-6; // tolerated expected missed hits per run
  std::uint64_t seed = 0;
  EngineKind engine = EngineKind::event;
  double grid_step = 1e-3;   // grid engine only
  BoundaryMode boundary = BoundaryMode::moving;
  long long explosion_cap = 1'000'000; // max cumulative absorbed per run
  bool explosion_cap_explicit = false;
  double frontier_margin = 10.0; // sigmas of sqrt(T) kept materialized ahead

  bool subcritical() const { return lambda * delta < 1.0; }

  void validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("params: lambda must be > 0");
    if (!(delta > 0.0)) throw std::invalid_argument("params: delta must be > 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("params: horizon must be > 0");
    if (drift < 0.0) throw std::invalid_argument("params: drift must be >= 0");
    if (!(trunc_epsilon > 0.0)) throw std::invalid_argument("params: trunc_epsilon must be > 0");
    if (!(grid_step > 0.0)) throw std::invalid_argument("params: grid_step must be > 0");
    if (explosion_cap <= 0) throw std::invalid_argument("params: explosion_cap must be > 0");
    if (!(frontier_margin >= 1.0)) throw std::invalid_argument("params: frontier_margin must be >= 1");
    if (!subcritical() && boundary == BoundaryMode::moving && !explosion_cap_explicit) {
      throw std::invalid_argument(
          "params: lambda*delta >= 1 (supercritical); an explicit "
          "explosion cap is required for an unbounded-growth run");
    }
  }
};

inline std::vector<double> default_output_grid(double horizon, int points = 64) {
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double lo = horizon * 1e-2;
  for (int i = 0; i < points; ++i) {
    grid[static_cast<std::size_t>(i)] =
        lo * std::pow(horizon / lo, static_cast<double>(i) / (points - 1));
  }
  grid.back() = horizon;
  return grid;
}

namespace detail {
inline void fnv1a(std::uint64_t& h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
}
} // namespace detail

// Stable hash of the run configuration; embedded in every output file so a
// result can always be traced back to the exact parameters.
inline std::uint64_t config_hash(const SystemParams& p) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "lambda=%.17g;delta=%.17g;drift=%.17g;horizon=%.17g;"
                "eps=%.17g;seed=%llu;engine=%s;step=%.17g;boundary=%s;"
                "cap=%lld;margin=%.17g",
                p.lambda, p.delta, p.drift, p.horizon, p.trunc_epsilon,
                static_cast<unsigned long long>(p.seed), to_string(p.engine),
                p.grid_step, to_string(p.boundary), p.explosion_cap,
                p.frontier_margin);
  std::uint64_t h = 14695981039346656037ULL;
  detail::fnv1a(h, buf);
  return h;
}

} // namespace accrete
