#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "accrete/analytic.hpp"
#include "accrete/chains.hpp"
#include "accrete/engine.hpp"
#include "accrete/quadrature.hpp"
#include "accrete/stats.hpp"

// The reproduction gates: each one pins parameters, seeds, replica counts
// and a tolerance, runs the simulation or the pure identities, and reports
// pass/fail with the deciding statistic. The CLI `validate` subcommand and
// the acceptance suite both drive these.

namespace accrete::validate {

struct GateResult {
  std::string name;
  bool pass = false;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteConfig {
  bool quick = false;
  int threads = 0; // 0 -> hardware concurrency
};

namespace detail {

inline int threads_of(const SuiteConfig& cfg) {
  return cfg.threads > 0 ? cfg.threads : default_thread_count();
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

inline std::vector<Trajectory> run_many(const SystemParams& params,
                                        const EngineHooks& hooks, int replicas,
                                        int threads) {
  std::vector<Trajectory> out(static_cast<std::size_t>(replicas));
  run_replicas(replicas, threads, [&](int r) {
    out[static_cast<std::size_t>(r)] =
        run(params, hooks, static_cast<std::uint32_t>(r)).trajectory;
  });
  return out;
}

template <class Fn>
inline GateResult timed(const std::string& name, Fn&& fn) {
  GateResult g;
  g.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  fn(g);
  const auto t1 = std::chrono::steady_clock::now();
  g.seconds = std::chrono::duration<double>(t1 - t0).count();
  return g;
}

// --------------------------------------------------------------------------
// Speed theorem, v > 0: mean xi(T)/T within +-5% of V = v dl / (1 - dl).
// --------------------------------------------------------------------------

inline GateResult gate_speed(const std::string& name, double lambda, double v,
                             std::uint64_t seed, const SuiteConfig& cfg) {
  return timed(name, [&](GateResult& g) {
    SystemParams p;
    p.lambda = lambda;
    p.delta = 1.0;
    p.drift = v;
    p.horizon = cfg.quick ? 200.0 : 500.0;
    p.seed = seed;
    const int replicas = cfg.quick ? 30 : 100;
    const double rel_tol = cfg.quick ? 0.08 : 0.05;
    EngineHooks hooks;
    hooks.output_grid = {0.5 * p.horizon, p.horizon};
    stats::ReplicaSet<Trajectory> reps{p, run_many(p, hooks, replicas,
                                                   threads_of(cfg))};
    const auto est = stats::estimate_speed(reps);
    const double target = analytic::asymptotic_speed(p.lambda, p.delta, p.drift);
    g.statistic = std::abs(est.v_hat.mean - target) / target;
    g.threshold = rel_tol;
    g.pass = g.statistic <= g.threshold;
    g.detail = "V_hat=" + fmt(est.v_hat.mean) + " target=" + fmt(target) +
               " rel_err=" + fmt(g.statistic) + " two_point=" +
               fmt(est.two_point.mean) + " replicas=" + std::to_string(replicas);
  });
}

// --------------------------------------------------------------------------
// Zero drift: MN(T)/sqrt(T) significantly above lambda sqrt(2/pi) and above
// the frozen-boundary control curve at the last three grid times.
// --------------------------------------------------------------------------

inline GateResult gate_sqrt_lower(const SuiteConfig& cfg) {
  return timed("sqrt-lower-bound", [&](GateResult& g) {
    SystemParams p;
    p.lambda = 0.5;
    p.delta = 1.0;
    p.drift = 0.0;
    p.horizon = cfg.quick ? 200.0 : 400.0;
    p.seed = 0xACC003;
    const int replicas = cfg.quick ? 300 : 1000;
    EngineHooks hooks; // default 64-point grid
    stats::ReplicaSet<Trajectory> moving{
        p, run_many(p, hooks, replicas, threads_of(cfg))};
    SystemParams pf = p;
    pf.boundary = BoundaryMode::frozen;
    pf.seed = 0xACC004;
    stats::ReplicaSet<Trajectory> frozen{
        pf, run_many(pf, hooks, replicas, threads_of(cfg))};
    const auto est = stats::estimate_sqrt_ratio(moving);
    const auto ctrl = stats::estimate_sqrt_ratio(frozen);
    bool above_control = true;
    std::string gap_str;
    const std::size_t last3 = est.curve.size() - 3;
    for (std::size_t j = last3; j < est.curve.size(); ++j) {
      const double gap = est.curve[j].ratio.mean - ctrl.curve[j].ratio.mean;
      above_control = above_control && gap > 0.0;
      gap_str += (j > last3 ? "," : "") + fmt(gap);
    }
    g.statistic = est.z_lower;
    g.threshold = stats::kZ99OneSided;
    g.pass = est.lower_bound_exceeded && above_control;
    g.detail = "ratio(T)=" + fmt(est.curve.back().ratio.mean) + " ref=" +
               fmt(est.reference) + " z=" + fmt(est.z_lower) +
               " control_gaps=" + gap_str + " spread=" +
               fmt(est.stability_spread);
  });
}

// --------------------------------------------------------------------------
// Frozen boundary mean: mean hit count at T within 2 stderr of the
// closed-form lambda sqrt(2T/pi).
// --------------------------------------------------------------------------

inline GateResult gate_frozen_mean(const SuiteConfig& cfg) {
  return timed("frozen-mean-hits", [&](GateResult& g) {
    SystemParams p;
    p.lambda = 0.5;
    p.delta = 1.0;
    p.drift = 0.0;
    p.horizon = cfg.quick ? 200.0 : 400.0;
    p.seed = 0xACC005;
    p.boundary = BoundaryMode::frozen;
    const int replicas = cfg.quick ? 300 : 1000;
    EngineHooks hooks;
    hooks.output_grid = {p.horizon};
    const auto trajs = run_many(p, hooks, replicas, threads_of(cfg));
    std::vector<double> hits;
    hits.reserve(trajs.size());
    for (const auto& t : trajs) hits.push_back(static_cast<double>(t.n_final));
    const auto ci = stats::mean_ci(hits);
    const double target = analytic::mean_fixed_hits(p.lambda, p.horizon);
    g.statistic = std::abs(ci.mean - target) / ci.stderr_;
    g.threshold = 2.0;
    g.pass = g.statistic <= g.threshold;
    g.detail = "mean=" + fmt(ci.mean) + " target=" + fmt(target) +
               " stderr=" + fmt(ci.stderr_);
  });
}

// --------------------------------------------------------------------------
// Joint law of (L, K0) in the frozen model at lambda=1, T=1, d=1: both
// Poisson with the predicted means, and independent. Grid engine, so the
// check does not reuse the analytic kernels being tested.
// --------------------------------------------------------------------------

inline GateResult gate_lemma_lt(const SuiteConfig& cfg) {
  return timed("frozen-joint-law", [&](GateResult& g) {
    SystemParams p;
    p.lambda = 1.0;
    p.delta = 1.0;
    p.drift = 0.0;
    p.horizon = 1.0;
    p.seed = 0xACC006;
    p.engine = EngineKind::grid;
    p.grid_step = cfg.quick ? 2e-3 : 1e-3;
    p.boundary = BoundaryMode::frozen;
    const double d = 1.0;
    const int replicas = cfg.quick ? 3000 : 10000;
    std::vector<FrozenPair> pairs(static_cast<std::size_t>(replicas));
    run_replicas(replicas, threads_of(cfg), [&](int r) {
      pairs[static_cast<std::size_t>(r)] =
          run_frozen(p, d, static_cast<std::uint32_t>(r));
    });
    std::vector<long long> l_counts, k_counts;
    std::vector<std::pair<long long, long long>> lk;
    for (const auto& pr : pairs) {
      l_counts.push_back(pr.hits);
      k_counts.push_back(pr.k0);
      lk.emplace_back(pr.hits, pr.k0);
    }
    const double mean_l = analytic::mean_fixed_hits(p.lambda, p.horizon);
    const double mean_k =
        analytic::k0_mean(p.lambda, d, p.horizon);
    const double p_l = stats::poisson_gof_pvalue(l_counts, mean_l);
    const double p_k = stats::poisson_gof_pvalue(k_counts, mean_k);
    const auto ind = stats::independence_test(lk);
    g.statistic = std::min({p_l, p_k, ind.p_value});
    g.threshold = 0.01;
    g.pass = g.statistic > g.threshold;
    g.detail = "p_L=" + fmt(p_l) + " p_K0=" + fmt(p_k) + " p_ind=" +
               fmt(ind.p_value) + " corr=" + fmt(ind.correlation) +
               " mean_L=" + fmt(mean_l) + " mean_K0=" + fmt(mean_k);
  });
}

// --------------------------------------------------------------------------
// First event time: KS against 1 - exp(-lambda sqrt(2t/pi)) and the
// closed-form median.
// --------------------------------------------------------------------------

inline GateResult gate_tau(const SuiteConfig& cfg) {
  return timed("first-event-law", [&](GateResult& g) {
    SystemParams p;
    p.lambda = 1.0;
    p.delta = 1.0;
    p.drift = 0.0;
    p.horizon = 250.0; // P(tau > T) ~ 3e-6: censoring is negligible
    p.seed = 0xACC007;
    p.boundary = BoundaryMode::frozen;
    const int replicas = cfg.quick ? 3000 : 10000;
    EngineHooks hooks;
    hooks.output_grid = {p.horizon};
    hooks.max_events = 1;
    std::vector<double> taus(static_cast<std::size_t>(replicas), -1.0);
    run_replicas(replicas, threads_of(cfg), [&](int r) {
      const auto res = run(p, hooks, static_cast<std::uint32_t>(r));
      if (!res.trajectory.jumps.empty()) {
        taus[static_cast<std::size_t>(r)] = res.trajectory.jumps.front().t;
      }
    });
    std::vector<double> observed;
    for (double t : taus) {
      if (t >= 0.0) observed.push_back(t);
    }
    const double lambda = p.lambda;
    const double p_ks = stats::ks_pvalue(
        observed, [lambda](double t) { return analytic::tau_cdf(t, lambda); });
    std::vector<double> sorted = observed;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double target = analytic::tau_median(lambda);
    const double med_err = std::abs(median - target) / target;
    g.statistic = p_ks;
    g.threshold = 0.01;
    g.pass = p_ks > 0.01 && med_err <= 0.03;
    g.detail = "p_ks=" + fmt(p_ks) + " median=" + fmt(median) + " target=" +
               fmt(target) + " med_rel_err=" + fmt(med_err);
  });
}

// --------------------------------------------------------------------------
// Chains: subcritical absorption is near-certain, supercritical absorption
// matches the branching extinction probability, and the mu-chain drift
// turns positive past a finite left edge (the transience witness).
// --------------------------------------------------------------------------

inline double extinction_probability_oracle(double offspring_mean) {
  double q = 0.0;
  for (int i = 0; i < 200; ++i) q = std::exp(offspring_mean * (q - 1.0));
  return q;
}

inline GateResult gate_chains(const SuiteConfig& cfg) {
  return timed("absorption-chains", [&](GateResult& g) {
    const long long replicas = cfg.quick ? 3000 : 10000;
    const auto sub = chains::m_absorption_estimate(1, 0.5, 1.0, 1000, replicas,
                                                   0xACC008);
    const auto super = chains::m_absorption_estimate(1, 1.5, 1.0, 1000,
                                                     replicas, 0xACC009);
    const double q_oracle = extinction_probability_oracle(1.5);
    const double super_err = std::abs(super.absorbed_fraction - q_oracle);
    const double threshold =
        chains::mu_drift_positive_threshold(1.2, 1.0, 1.0, 1, 50.0);
    chains::MuChainState probe{1, 1, threshold + 2.0, 1.0};
    const bool drift_positive_beyond =
        std::isfinite(threshold) &&
        chains::lyapunov_drift(probe, 1.2, 1.0) > 0.0;
    g.statistic = super_err;
    g.threshold = 0.02;
    g.pass = sub.absorbed_fraction >= 0.999 && super_err <= 0.02 &&
             drift_positive_beyond;
    g.detail = "sub_absorbed=" + fmt(sub.absorbed_fraction) +
               " super_absorbed=" + fmt(super.absorbed_fraction) +
               " extinction_oracle=" + fmt(q_oracle) + " mu_threshold=" +
               fmt(threshold);
  });
}

// --------------------------------------------------------------------------
// Explosion: supercritical runs hit the cap with Wilson-certain positive
// frequency; subcritical runs never do.
// --------------------------------------------------------------------------

inline GateResult gate_explosion(const SuiteConfig& cfg) {
  return timed("explosion-frequency", [&](GateResult& g) {
    SystemParams p;
    p.lambda = 1.5;
    p.delta = 1.0;
    p.drift = 0.0;
    p.horizon = 50.0;
    p.seed = 0xACC00A;
    p.explosion_cap = cfg.quick ? 200'000 : 1'000'000;
    p.explosion_cap_explicit = true;
    const int replicas = cfg.quick ? 120 : 500;
    EngineHooks hooks;
    hooks.output_grid = {p.horizon};
    stats::ReplicaSet<Trajectory> super{
        p, run_many(p, hooks, replicas, threads_of(cfg))};
    const auto freq = stats::explosion_frequency(super);
    SystemParams ps = p;
    ps.lambda = 0.5;
    ps.seed = 0xACC00B;
    ps.explosion_cap_explicit = false;
    stats::ReplicaSet<Trajectory> sub{
        ps, run_many(ps, hooks, replicas, threads_of(cfg))};
    long long sub_exploded = 0;
    for (const auto& t : sub.items) {
      if (t.exploded) ++sub_exploded;
    }
    g.statistic = freq.ci.lo;
    g.threshold = 0.0;
    g.pass = freq.positive_with_confidence && sub_exploded == 0;
    g.detail = "super_fraction=" + fmt(freq.ci.fraction) + " wilson99_lo=" +
               fmt(freq.ci.lo) + " sub_exploded=" +
               std::to_string(sub_exploded);
  });
}

// --------------------------------------------------------------------------
// Cross-engine law equality: two-sample KS on N(T) between the event
// engine and the grid oracle.
// --------------------------------------------------------------------------

inline GateResult gate_cross_engine(const std::string& name, double v,
                                    std::uint64_t seed_event,
                                    std::uint64_t seed_grid,
                                    const SuiteConfig& cfg) {
  return timed(name, [&](GateResult& g) {
    SystemParams p;
    p.lambda = 0.5;
    p.delta = 1.0;
    p.drift = v;
    p.horizon = cfg.quick ? 25.0 : 50.0;
    p.seed = seed_event;
    const int replicas = cfg.quick ? 250 : 1000;
    EngineHooks hooks;
    hooks.output_grid = {p.horizon};
    const auto ev = run_many(p, hooks, replicas, threads_of(cfg));
    SystemParams pg = p;
    pg.engine = EngineKind::grid;
    pg.grid_step = cfg.quick ? 2e-3 : 1e-3;
    pg.seed = seed_grid;
    const auto gr = run_many(pg, hooks, replicas, threads_of(cfg));
    std::vector<double> n_event, n_grid;
    for (const auto& t : ev) n_event.push_back(static_cast<double>(t.n_final));
    for (const auto& t : gr) n_grid.push_back(static_cast<double>(t.n_final));
    double d_stat = 0.0;
    const double p_ks = stats::ks2_pvalue(n_event, n_grid, &d_stat);
    const auto mean_e = stats::mean_ci(n_event);
    const auto mean_g = stats::mean_ci(n_grid);
    g.statistic = p_ks;
    g.threshold = 0.01;
    g.pass = p_ks > 0.01;
    g.detail = "p_ks=" + fmt(p_ks) + " D=" + fmt(d_stat) + " mean_event=" +
               fmt(mean_e.mean) + " mean_grid=" + fmt(mean_g.mean);
  });
}

// --------------------------------------------------------------------------
// Pure identities: kernel normalization, density normalizations, the exact
// tail at level zero, and the absorbing-kernel semigroup property.
// --------------------------------------------------------------------------

inline GateResult gate_analytic(const SuiteConfig&) {
  return timed("analytic-identities", [&](GateResult& g) {
    const double grid_vals[5] = {0.25, 0.5, 1.0, 2.0, 4.0};
    double worst_kernel = 0.0;
    for (double t : grid_vals) {
      for (double x : grid_vals) {
        const auto integral = quadrature::integrate_to_inf(
            [t, x](double y) { return analytic::survivor_kernel(t, x, y); },
            0.0, 1e-11);
        const double err = std::abs(integral.value -
                                    analytic::survivor_rate(t, x));
        worst_kernel = std::max(worst_kernel, err);
      }
    }
    double worst_norm = 0.0;
    for (double lambda : {0.5, 1.0, 2.0}) {
      // substitute t = u^2 to tame the 1/sqrt(t) endpoint
      const auto integral = quadrature::integrate_to_inf(
          [lambda](double u) {
            return 2.0 * u * analytic::tau_density(u * u, lambda);
          },
          1e-8, 1e-11);
      worst_norm = std::max(worst_norm, std::abs(integral.value - 1.0));
    }
    for (double x : {0.5, 1.0, 2.0}) {
      const auto integral = quadrature::integrate_to_inf(
          [x](double t) { return analytic::first_hit_density(t, x); }, 1e-12,
          1e-11);
      worst_norm = std::max(worst_norm, std::abs(integral.value - 1.0));
    }
    bool tail_exact = true;
    for (double v : {0.0, 0.5, 2.0}) {
      for (double t : {0.5, 1.0, 10.0}) {
        tail_exact =
            tail_exact && analytic::max_drifted_bm_tail(0.0, v, t) == 1.0;
      }
    }
    double worst_semigroup = 0.0;
    for (double s : {0.5, 1.0}) {
      for (double t : {0.5, 2.0}) {
        for (double x : {0.5, 1.5}) {
          for (double y : {1.0, 2.0}) {
            const auto conv = quadrature::integrate_to_inf(
                [&](double z) {
                  return analytic::survivor_kernel(s, x, z) *
                         analytic::survivor_kernel(t, z, y);
                },
                0.0, 1e-9);
            worst_semigroup = std::max(
                worst_semigroup,
                std::abs(conv.value - analytic::survivor_kernel(s + t, x, y)));
          }
        }
      }
    }
    g.statistic = std::max({worst_kernel, worst_norm});
    g.threshold = 1e-8;
    g.pass = worst_kernel <= 1e-8 && worst_norm <= 1e-8 && tail_exact &&
             worst_semigroup <= 1e-6;
    g.detail = "kernel_err=" + fmt(worst_kernel) + " norm_err=" +
               fmt(worst_norm) + " semigroup_err=" + fmt(worst_semigroup) +
               " tail_exact=" + (tail_exact ? std::string("yes") : "no");
  });
}

} // namespace detail

inline std::vector<std::string> suite_names() {
  return {"speed", "sqrt", "lemma-lt", "tau", "chains", "explosion",
          "cross-engine", "analytic", "all"};
}

inline std::vector<GateResult> run_suite(const std::string& suite,
                                         const SuiteConfig& cfg = {}) {
  std::vector<GateResult> out;
  const bool all = suite == "all";
  bool known = all;
  if (all || suite == "speed") {
    known = true;
    out.push_back(detail::gate_speed("speed-v1", 0.5, 1.0, 0xACC001, cfg));
    out.push_back(detail::gate_speed("speed-v2", 0.9, 2.0, 0xACC002, cfg));
  }
  if (all || suite == "sqrt") {
    known = true;
    out.push_back(detail::gate_sqrt_lower(cfg));
    out.push_back(detail::gate_frozen_mean(cfg));
  }
  if (all || suite == "lemma-lt") {
    known = true;
    out.push_back(detail::gate_lemma_lt(cfg));
  }
  if (all || suite == "tau") {
    known = true;
    out.push_back(detail::gate_tau(cfg));
  }
  if (all || suite == "chains") {
    known = true;
    out.push_back(detail::gate_chains(cfg));
  }
  if (all || suite == "explosion") {
    known = true;
    out.push_back(detail::gate_explosion(cfg));
  }
  if (all || suite == "cross-engine") {
    known = true;
    out.push_back(detail::gate_cross_engine("cross-engine-drift", 1.0,
                                            0xACC00C, 0xACC00D, cfg));
    out.push_back(detail::gate_cross_engine("cross-engine-zero", 0.0,
                                            0xACC00E, 0xACC00F, cfg));
  }
  if (all || suite == "analytic") {
    known = true;
    out.push_back(detail::gate_analytic(cfg));
  }
  if (!known) {
    throw std::invalid_argument("unknown validation suite: " + suite);
  }
  return out;
}

inline bool all_pass(const std::vector<GateResult>& gates) {
  for (const auto& g : gates) {
    if (!g.pass) return false;
  }
  return true;
}

} // namespace accrete::validate
