#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "accrete/analytic.hpp"
#include "accrete/core.hpp"
#include "accrete/field.hpp"
#include "accrete/params.hpp"
#include "accrete/sampling.hpp"

// Two simulators for the accreting-boundary process. The event-driven
// engine is exact in law: between jumps the boundary is static, so each
// inter-event step is (first-passage minimum, conditioned endpoints). The
// grid engine is an independent oracle: Euler steps with Brownian-bridge
// crossing corrections, converging in law as the step shrinks. Both share
// the ledger, the lazy field, and the certified truncation accounting.

namespace accrete {

struct EngineHooks {
  std::vector<double> output_grid; // empty -> default_output_grid(horizon)
  long long max_events = -1;       // stop after this many events (<0: none)
  bool collect_survivors = false;  // snapshot survivor positions at horizon
};

struct RunResult {
  Trajectory trajectory;
  std::vector<double> survivors; // positions at horizon, if requested
};

namespace engine_detail {

struct LiveParticle {
  double origin;
  double pos;
  RngStream rng;
  bool alive = true;
};

inline std::vector<double> resolve_grid(const SystemParams& params,
                                        const EngineHooks& hooks) {
  std::vector<double> grid =
      hooks.output_grid.empty() ? default_output_grid(params.horizon)
                                : hooks.output_grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || grid[i] > params.horizon ||
        (i > 0 && grid[i] <= grid[i - 1])) {
      throw std::invalid_argument(
          "output grid must be strictly increasing within (0, horizon]");
    }
  }
  return grid;
}

// Mutable state of one run. `t` is the timestamp of the stored particle
// positions; it trails the horizon until the run finishes.
struct RunState {
  const SystemParams& params;
  std::uint32_t replica;
  ParticleField field;
  Bookkeeper book;
  std::vector<LiveParticle> active;
  std::uint64_t next_particle_id = 0;
  double t = 0.0;
  sampling::EndpointStats ep_stats;
  std::uint64_t tie_breaks = 0;

  RunState(const SystemParams& p, std::uint32_t r)
      : params(p), replica(r), field(p.lambda, p.seed, r),
        book(p.delta, p.boundary == BoundaryMode::frozen) {}

  // Materialize initial positions up to `target` and place the newcomers at
  // the current time, conditioned above the current boundary.
  void materialize_to(double target) {
    if (field.frontier() >= target) return;
    const std::size_t old_n = field.size();
    field.extend_to(target);
    const auto all = field.positions();
    for (std::size_t i = old_n; i < all.size(); ++i) {
      const double x = all[i];
      LiveParticle p{x, x,
                     RngStream(params.seed, replica,
                               particle_stream(next_particle_id++)),
                     true};
      if (t > 0.0) {
        if (x <= book.xi()) {
          throw std::logic_error("engine: materialized below the boundary");
        }
        p.pos = sampling::survivor_endpoint_sample(x, book.xi(), t,
                                                   params.drift, p.rng,
                                                   &ep_stats);
      }
      active.push_back(std::move(p));
    }
  }

  // Frontier policy: stay v*t + margin*sqrt(T) ahead of the boundary, so
  // particles materialize before they can plausibly interact and the
  // never-materialized tail stays certifiably negligible over the full run.
  void ensure_margin() {
    const double ahead = params.drift * t +
                         params.frontier_margin * std::sqrt(params.horizon) +
                         params.delta;
    materialize_to(book.xi() + ahead);
  }

  void compact() {
    std::erase_if(active, [](const LiveParticle& p) { return !p.alive; });
  }

  double final_truncation_bound() const {
    const double frontier =
        std::max(field.frontier(), book.xi() + 1e-9 * (book.xi() + 1.0));
    return analytic::truncation_tail_mass(frontier, book.xi(), params.horizon,
                                          params.drift, params.lambda);
  }
};

// Swallow pass for one jump: widen the frontier until the k-recurrence can
// be decided, then tombstone the swallowed particles. The hitter must
// already be dead. Returns false when the explosion cap is exhausted.
inline bool apply_jump(RunState& st, double t_event, double hitter_origin) {
  std::vector<std::pair<double, std::size_t>> order;
  while (true) {
    order.clear();
    order.reserve(st.active.size());
    for (std::size_t i = 0; i < st.active.size(); ++i) {
      if (st.active[i].alive && st.active[i].pos > st.book.xi()) {
        order.emplace_back(st.active[i].pos, i);
      }
    }
    std::sort(order.begin(), order.end());
    std::vector<double> sorted_pos(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) sorted_pos[i] = order[i].first;
    const JumpScan scan = jump_size_scan(
        st.book.xi(), st.params.delta, sorted_pos, st.field.frontier(),
        st.params.explosion_cap - st.book.absorbed());
    if (scan.status == JumpScan::Status::need_frontier) {
      st.materialize_to(scan.required_frontier + st.params.delta);
      continue;
    }
    if (scan.status == JumpScan::Status::exploded) {
      return false;
    }
    std::vector<double> swallowed_origins;
    swallowed_origins.reserve(scan.swallowed_count);
    for (std::size_t i = 0; i < scan.swallowed_count; ++i) {
      swallowed_origins.push_back(st.active[order[i].second].origin);
      st.active[order[i].second].alive = false;
    }
    st.book.apply_event(t_event, scan.k, hitter_origin, swallowed_origins);
    return true;
  }
}

inline RunResult finalize(RunState& st, std::vector<SamplePoint> samples,
                          bool exploded, const EngineHooks& hooks) {
  RunResult out;
  if (hooks.collect_survivors && !exploded) {
    for (auto& p : st.active) {
      if (!p.alive) continue;
      double pos = p.pos;
      if (st.t < st.params.horizon) {
        pos = sampling::survivor_endpoint_sample(p.pos, st.book.xi(),
                                                 st.params.horizon - st.t,
                                                 st.params.drift, p.rng,
                                                 &st.ep_stats);
      }
      out.survivors.push_back(pos);
    }
  }
  out.trajectory.samples = std::move(samples);
  out.trajectory.exploded = exploded;
  out.trajectory.xi_final = st.book.xi();
  out.trajectory.n_final = st.book.absorbed();
  out.trajectory.truncation_bound = st.final_truncation_bound();
  out.trajectory.endpoint_table_fallbacks = st.ep_stats.table_fallbacks;
  out.trajectory.fpt_tie_breaks = st.tie_breaks;
  out.trajectory.jumps = st.book.take_jumps();
  return out;
}

// Frozen boundary, event engine: with a static barrier particles never
// interact, so each one contributes a single exact first-passage draw.
inline RunResult run_event_frozen(const SystemParams& params,
                                  const EngineHooks& hooks,
                                  std::uint32_t replica) {
  const std::vector<double> grid = resolve_grid(params, hooks);
  RunState st(params, replica);
  const double T = params.horizon;
  st.materialize_to(params.drift * T + params.frontier_margin * std::sqrt(T) +
                    params.delta);
  struct Hit {
    double t;
    std::size_t idx;
  };
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < st.active.size(); ++i) {
    const double fpt =
        sampling::fpt_sample(st.active[i].pos, params.drift, st.active[i].rng);
    if (fpt <= T) hits.push_back({fpt, i});
  }
  std::sort(hits.begin(), hits.end(),
            [](const Hit& a, const Hit& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < hits.size(); ++i) {
    while (hits[i].t <= hits[i - 1].t) {
      ++st.tie_breaks;
      hits[i].t = std::nextafter(hits[i - 1].t,
                                 std::numeric_limits<double>::infinity());
    }
  }
  const long long cap = hooks.max_events >= 0
                            ? hooks.max_events
                            : std::numeric_limits<long long>::max();
  std::vector<SamplePoint> samples;
  samples.reserve(grid.size());
  std::size_t next_grid = 0;
  long long events = 0;
  for (const Hit& h : hits) {
    if (events >= cap) break;
    while (next_grid < grid.size() && grid[next_grid] <= h.t) {
      samples.push_back(st.book.sample(grid[next_grid++]));
    }
    st.book.apply_hit(h.t, st.active[h.idx].origin);
    st.active[h.idx].alive = false;
    ++events;
  }
  while (next_grid < grid.size()) {
    samples.push_back(st.book.sample(grid[next_grid++]));
  }
  st.compact();
  if (hooks.collect_survivors) {
    for (auto& p : st.active) {
      p.pos = sampling::survivor_endpoint_sample(p.pos, 0.0, T, params.drift,
                                                 p.rng, &st.ep_stats);
    }
  }
  st.t = T;
  return finalize(st, std::move(samples), false, hooks);
}

} // namespace engine_detail

// Exact event-driven simulation of the accreting boundary.
inline RunResult run_event_driven(const SystemParams& params,
                                  const EngineHooks& hooks = {},
                                  std::uint32_t replica = 0) {
  params.validate();
  if (params.boundary == BoundaryMode::frozen) {
    return engine_detail::run_event_frozen(params, hooks, replica);
  }
  const std::vector<double> grid = engine_detail::resolve_grid(params, hooks);
  engine_detail::RunState st(params, replica);
  const double T = params.horizon;
  std::vector<SamplePoint> samples;
  samples.reserve(grid.size());
  std::size_t next_grid = 0;
  auto emit_until = [&](double up_to) {
    while (next_grid < grid.size() && grid[next_grid] <= up_to) {
      samples.push_back(st.book.sample(grid[next_grid++]));
    }
  };
  bool exploded = false;
  long long events = 0;
  st.ensure_margin();
  while (st.t < T) {
    if (st.active.empty()) break; // beyond-frontier hits are certified away
    const double xi = st.book.xi();
    double best = std::numeric_limits<double>::infinity();
    std::size_t hit_idx = 0;
    for (std::size_t i = 0; i < st.active.size(); ++i) {
      const double fpt = sampling::fpt_sample(st.active[i].pos - xi,
                                              params.drift, st.active[i].rng);
      if (fpt < best) {
        best = fpt;
        hit_idx = i;
      } else if (fpt == best) {
        ++st.tie_breaks; // keep the lower index; measure-zero event
      }
    }
    double t_event = st.t + best;
    if (t_event <= st.t) {
      t_event = std::nextafter(st.t, std::numeric_limits<double>::infinity());
    }
    if (!(t_event <= T)) break;
    emit_until(t_event); // xi at the jump instant is the pre-jump value
    for (std::size_t i = 0; i < st.active.size(); ++i) {
      if (i == hit_idx) continue;
      st.active[i].pos = sampling::survivor_endpoint_sample(
          st.active[i].pos, xi, best, params.drift, st.active[i].rng,
          &st.ep_stats);
    }
    const double hitter_origin = st.active[hit_idx].origin;
    st.active[hit_idx].alive = false;
    st.t = t_event;
    if (!engine_detail::apply_jump(st, t_event, hitter_origin)) {
      exploded = true;
      break;
    }
    st.compact();
    st.ensure_margin();
    ++events;
    if (hooks.max_events >= 0 && events >= hooks.max_events) break;
  }
  if (!exploded) emit_until(T);
  return engine_detail::finalize(st, std::move(samples), exploded, hooks);
}

// Independent oracle: Euler-Maruyama steps, within-step absorption via the
// Brownian-bridge crossing probability against the static level, jumps
// applied at sampled sub-times in causal order.
inline RunResult run_grid(const SystemParams& params,
                          const EngineHooks& hooks = {},
                          std::uint32_t replica = 0) {
  params.validate();
  const std::vector<double> grid = engine_detail::resolve_grid(params, hooks);
  engine_detail::RunState st(params, replica);
  const bool frozen = params.boundary == BoundaryMode::frozen;
  const double T = params.horizon;
  std::vector<SamplePoint> samples;
  samples.reserve(grid.size());
  std::size_t next_grid = 0;
  auto emit_until = [&](double up_to) {
    while (next_grid < grid.size() && grid[next_grid] <= up_to) {
      samples.push_back(st.book.sample(grid[next_grid++]));
    }
  };
  bool exploded = false;
  bool done = false;
  long long events = 0;
  const long long cap = hooks.max_events >= 0
                            ? hooks.max_events
                            : std::numeric_limits<long long>::max();
  st.ensure_margin();
  struct Crosser {
    double subtime;
    std::size_t idx;
  };
  std::vector<Crosser> crossers;
  while (st.t < T && !done) {
    const double step_start = st.t;
    const double step = std::min(params.grid_step, T - step_start);
    const double sqrt_step = std::sqrt(step);
    const double xi = st.book.xi();
    crossers.clear();
    for (std::size_t i = 0; i < st.active.size(); ++i) {
      auto& p = st.active[i];
      const double x_old = p.pos;
      const double x_new =
          x_old - params.drift * step + sqrt_step * p.rng.normal();
      bool crossed = false;
      if (x_new <= xi) {
        crossed = true;
      } else {
        const double d0 = x_old - xi;
        const double d1 = x_new - xi;
        if (d0 * d1 < 22.0 * step) { // else p < 1e-19, skip the draw
          crossed = p.rng.u01() < sampling::bridge_cross_prob(d0, d1, step);
        }
      }
      p.pos = x_new;
      if (crossed) crossers.push_back({step_start + p.rng.u01() * step, i});
    }
    std::sort(crossers.begin(), crossers.end(),
              [](const Crosser& a, const Crosser& b) {
                return a.subtime < b.subtime;
              });
    for (std::size_t i = 1; i < crossers.size(); ++i) {
      while (crossers[i].subtime <= crossers[i - 1].subtime) {
        crossers[i].subtime = std::nextafter(
            crossers[i - 1].subtime, std::numeric_limits<double>::infinity());
      }
    }
    for (const Crosser& c : crossers) {
      if (!st.active[c.idx].alive) continue; // swallowed earlier this step
      emit_until(c.subtime);
      const double origin = st.active[c.idx].origin;
      st.active[c.idx].alive = false;
      st.t = c.subtime; // newcomers materialize at the event time
      if (frozen) {
        st.book.apply_hit(c.subtime, origin);
      } else if (!engine_detail::apply_jump(st, c.subtime, origin)) {
        exploded = true;
        done = true;
        break;
      }
      ++events;
      if (events >= cap) {
        done = true;
        break;
      }
    }
    st.compact();
    if (exploded) break;
    st.t = step_start + step;
    st.ensure_margin();
    emit_until(st.t);
  }
  if (!exploded) emit_until(T);
  return engine_detail::finalize(st, std::move(samples), exploded, hooks);
}

// Dispatch on the configured engine kind.
inline RunResult run(const SystemParams& params, const EngineHooks& hooks = {},
                     std::uint32_t replica = 0) {
  return params.engine == EngineKind::event
             ? run_event_driven(params, hooks, replica)
             : run_grid(params, hooks, replica);
}

// One frozen-boundary replica: the hit count L and the survivor count K0
// left of d*sqrt(T) at the horizon.
struct FrozenPair {
  long long hits;
  long long k0;
};

inline FrozenPair run_frozen(const SystemParams& params, double d,
                             std::uint32_t replica = 0) {
  if (!(d >= 0.0)) throw std::invalid_argument("run_frozen: d must be >= 0");
  SystemParams p = params;
  p.boundary = BoundaryMode::frozen;
  EngineHooks hooks;
  hooks.collect_survivors = true;
  hooks.output_grid = {params.horizon};
  const RunResult r = run(p, hooks, replica);
  const double window = d * std::sqrt(params.horizon);
  long long k0 = 0;
  for (double pos : r.survivors) {
    if (pos < window) ++k0;
  }
  return {r.trajectory.n_final, k0};
}

// Static partition of independent replicas over a small thread pool.
// Results must be written into caller-owned slots indexed by replica, which
// makes every aggregate independent of scheduling.
template <class Fn>
inline void run_replicas(int replicas, int threads, Fn&& fn) {
  if (replicas <= 0) return;
  threads = std::max(1, std::min(threads, replicas));
  if (threads == 1) {
    for (int r = 0; r < replicas; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      try {
        for (int r; (r = next.fetch_add(1)) < replicas;) {
          fn(r);
        }
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failed) std::rethrow_exception(error);
}

inline int default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace accrete
