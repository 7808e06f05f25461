// Command-line front end: single runs, replica sweeps, closed-form
// evaluation, and the reproduction gates.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "accrete/analytic.hpp"
#include "accrete/chains.hpp"
#include "accrete/core.hpp"
#include "accrete/engine.hpp"
#include "accrete/io.hpp"
#include "accrete/stats.hpp"
#include "accrete/validate.hpp"
#include "accrete/version.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int env_threads_default() {
  if (const char* env = std::getenv("ACCRETE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return accrete::default_thread_count();
}

struct ParamOpts {
  accrete::SystemParams p;
  std::string engine = "event";
  std::string boundary = "moving";
  int samples = 64;
  CLI::Option* cap_opt = nullptr;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--lambda", p.lambda, "particle density per unit length")
        ->capture_default_str();
    cmd->add_option("--delta", p.delta, "particle size")->capture_default_str();
    cmd->add_option("--drift", p.drift, "leftward drift v >= 0")
        ->capture_default_str();
    cmd->add_option("--horizon", p.horizon, "run length T")
        ->capture_default_str();
    cmd->add_option("--seed", p.seed, "master seed")->capture_default_str();
    cmd->add_option("--engine", engine, "engine kind: event|grid")
        ->check(CLI::IsMember({"event", "grid"}))
        ->capture_default_str();
    cmd->add_option("--step", p.grid_step, "grid engine time step")
        ->capture_default_str();
    cmd->add_option("--boundary", boundary, "boundary mode: moving|frozen")
        ->check(CLI::IsMember({"moving", "frozen"}))
        ->capture_default_str();
    cap_opt = cmd->add_option("--explosion-cap", p.explosion_cap,
                              "max cumulative absorbed particles per run");
    cmd->add_option("--trunc-eps", p.trunc_epsilon,
                    "tolerated expected missed hits per run")
        ->capture_default_str();
    cmd->add_option("--margin", p.frontier_margin,
                    "frontier look-ahead in units of sqrt(T)")
        ->capture_default_str();
    cmd->add_option("--samples", samples, "output grid size")
        ->capture_default_str();
  }

  accrete::SystemParams resolve() {
    p.engine = engine == "grid" ? accrete::EngineKind::grid
                                : accrete::EngineKind::event;
    p.boundary = boundary == "frozen" ? accrete::BoundaryMode::frozen
                                      : accrete::BoundaryMode::moving;
    p.explosion_cap_explicit = cap_opt != nullptr && cap_opt->count() > 0;
    p.validate();
    return p;
  }
};

void print_value(double v) { std::printf("%.15g\n", v); }

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(ParamOpts& opts, const std::string& out_dir,
                 std::uint32_t replica, bool ndjson) {
  const accrete::SystemParams params = opts.resolve();
  accrete::EngineHooks hooks;
  hooks.output_grid = accrete::default_output_grid(params.horizon, opts.samples);
  const accrete::RunResult res = accrete::run(params, hooks, replica);
  fs::create_directories(out_dir);
  const std::uint64_t hash = accrete::config_hash(params);
  accrete::io::write_trajectory_csv(out_dir + "/trajectory.csv",
                                    res.trajectory, hash);
  accrete::io::write_events_csv(out_dir + "/events.csv", res.trajectory, hash);
  if (ndjson) {
    accrete::io::write_events_ndjson(out_dir + "/events.ndjson", res.trajectory,
                                     hash);
  }
  accrete::io::write_meta_json(out_dir + "/meta.json", params, res.trajectory,
                               replica);
  std::printf("wrote %s: events=%zu xi(T)=%.6g N(T)=%lld exploded=%s "
              "trunc_bound=%.3g\n",
              out_dir.c_str(), res.trajectory.jumps.size(),
              res.trajectory.xi_final, res.trajectory.n_final,
              res.trajectory.exploded ? "yes" : "no",
              res.trajectory.truncation_bound);
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct ReplicaOutcome {
  bool ok = false;
  std::string error;
  accrete::Trajectory traj;
  accrete::FrozenPair pair{0, 0};
};

int cmd_sweep(ParamOpts& opts, const std::string& quantity, int replicas,
              int threads, double d, const std::string& out_dir) {
  const accrete::SystemParams params = opts.resolve();
  if (replicas < 1) throw std::invalid_argument("sweep: replicas must be >= 1");
  accrete::EngineHooks hooks;
  if (quantity == "speed") {
    hooks.output_grid = {0.5 * params.horizon, params.horizon};
  } else {
    hooks.output_grid =
        accrete::default_output_grid(params.horizon, opts.samples);
  }
  std::vector<ReplicaOutcome> outcomes(static_cast<std::size_t>(replicas));
  accrete::run_replicas(replicas, threads, [&](int r) {
    auto& slot = outcomes[static_cast<std::size_t>(r)];
    try {
      if (quantity == "frozen-pair") {
        slot.pair = accrete::run_frozen(params, d,
                                        static_cast<std::uint32_t>(r));
      } else {
        slot.traj =
            accrete::run(params, hooks, static_cast<std::uint32_t>(r))
                .trajectory;
      }
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  });
  long long ok_count = 0;
  for (int r = 0; r < replicas; ++r) {
    if (outcomes[static_cast<std::size_t>(r)].ok) {
      ++ok_count;
    } else {
      std::fprintf(stderr, "replica %d failed: %s\n", r,
                   outcomes[static_cast<std::size_t>(r)].error.c_str());
    }
  }
  if (static_cast<double>(ok_count) < 0.9 * replicas) {
    std::fprintf(stderr, "sweep aborted: only %lld/%d replicas succeeded\n",
                 ok_count, replicas);
    return 1;
  }

  fs::create_directories(out_dir);
  const std::uint64_t hash = accrete::config_hash(params);
  const std::string hash_hex = accrete::io::hash_hex(hash);
  {
    auto out = accrete::io::open_for_write(out_dir + "/replicas.csv");
    out << "# accrete-csv " << accrete::io::kCsvSchemaVersion
        << " kind=replicas config=" << hash_hex << "\n";
    if (quantity == "frozen-pair") {
      out << "replica,hits,k0\n";
      for (int r = 0; r < replicas; ++r) {
        const auto& o = outcomes[static_cast<std::size_t>(r)];
        if (o.ok) out << r << ',' << o.pair.hits << ',' << o.pair.k0 << '\n';
      }
    } else {
      out << "replica,xi_final,n_final,exploded,truncation_bound\n";
      for (int r = 0; r < replicas; ++r) {
        const auto& o = outcomes[static_cast<std::size_t>(r)];
        if (o.ok) {
          out << r << ',' << accrete::io::format_double(o.traj.xi_final) << ','
              << o.traj.n_final << ',' << (o.traj.exploded ? 1 : 0) << ','
              << accrete::io::format_double(o.traj.truncation_bound) << '\n';
        }
      }
    }
  }

  json agg{{"quantity", quantity},
           {"config", hash_hex},
           {"version", accrete::kVersion},
           {"params", accrete::io::params_json(params)},
           {"replicas", replicas},
           {"succeeded", ok_count},
           {"threads_used_is_result_neutral", true}};
  accrete::stats::ReplicaSet<accrete::Trajectory> reps{params, {}};
  for (auto& o : outcomes) {
    if (o.ok && quantity != "frozen-pair") reps.items.push_back(o.traj);
  }
  if (quantity == "speed") {
    const auto est = accrete::stats::estimate_speed(reps);
    agg["v_hat"] = {{"mean", est.v_hat.mean},
                    {"stderr", est.v_hat.stderr_},
                    {"lo", est.v_hat.lo},
                    {"hi", est.v_hat.hi},
                    {"degenerate", est.v_hat.degenerate}};
    agg["two_point_slope"] = est.two_point.mean;
    agg["exploded_excluded"] = est.exploded_excluded;
    agg["target"] = params.drift > 0.0 && params.subcritical()
                        ? accrete::analytic::asymptotic_speed(
                              params.lambda, params.delta, params.drift)
                        : 0.0;
  } else if (quantity == "sqrt-ratio") {
    const auto est = accrete::stats::estimate_sqrt_ratio(reps);
    json curve = json::array();
    for (const auto& pt : est.curve) {
      curve.push_back({{"t", pt.t},
                       {"ratio", pt.ratio.mean},
                       {"lo", pt.ratio.lo},
                       {"hi", pt.ratio.hi}});
    }
    agg["curve"] = curve;
    agg["reference"] = est.reference;
    agg["z_lower"] = est.z_lower;
    agg["lower_bound_exceeded"] = est.lower_bound_exceeded;
    agg["stability_spread"] = est.stability_spread;
  } else if (quantity == "explosion") {
    const auto est = accrete::stats::explosion_frequency(reps);
    agg["exploded"] = est.exploded;
    agg["fraction"] = est.ci.fraction;
    agg["wilson99_lo"] = est.ci.lo;
    agg["wilson99_hi"] = est.ci.hi;
    agg["positive_with_confidence"] = est.positive_with_confidence;
  } else if (quantity == "frozen-pair") {
    std::vector<long long> l_counts, k_counts;
    std::vector<std::pair<long long, long long>> lk;
    for (const auto& o : outcomes) {
      if (!o.ok) continue;
      l_counts.push_back(o.pair.hits);
      k_counts.push_back(o.pair.k0);
      lk.emplace_back(o.pair.hits, o.pair.k0);
    }
    double mean_l = 0.0, mean_k = 0.0;
    for (std::size_t i = 0; i < l_counts.size(); ++i) {
      mean_l += static_cast<double>(l_counts[i]);
      mean_k += static_cast<double>(k_counts[i]);
    }
    mean_l /= static_cast<double>(l_counts.size());
    mean_k /= static_cast<double>(k_counts.size());
    agg["d"] = d;
    agg["mean_hits"] = mean_l;
    agg["mean_k0"] = mean_k;
    agg["predicted_mean_hits"] =
        accrete::analytic::mean_fixed_hits(params.lambda, params.horizon);
    agg["predicted_mean_k0"] =
        accrete::analytic::k0_mean(params.lambda, d, params.horizon);
    if (l_counts.size() >= 100) {
      agg["p_hits_poisson"] = accrete::stats::poisson_gof_pvalue(
          l_counts, agg["predicted_mean_hits"].get<double>());
      agg["p_k0_poisson"] = accrete::stats::poisson_gof_pvalue(
          k_counts, agg["predicted_mean_k0"].get<double>());
      agg["p_independence"] =
          accrete::stats::independence_test(lk).p_value;
    }
  } else {
    throw std::invalid_argument("sweep: unknown quantity " + quantity);
  }
  if (replicas == 1) agg["degenerate_ci"] = true;
  {
    auto out = accrete::io::open_for_write(out_dir + "/aggregate.json");
    out << agg.dump(2) << '\n';
  }
  std::printf("sweep %s: %lld/%d replicas ok, results in %s\n",
              quantity.c_str(), ok_count, replicas, out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// analytic
// ---------------------------------------------------------------------------

struct TableSpec {
  bool enabled = false;
  double lo = 0.0;
  double hi = 1.0;
  int n = 0;
};

int evaluate_analytic(const std::string& op, double x, double y, double t,
                      double d, double lambda, double delta, double drift,
                      double frontier, double xi_max, double horizon,
                      const TableSpec& table) {
  using namespace accrete::analytic;
  std::function<double(double)> f;
  std::string var;
  if (op == "tail") {
    f = [&](double xx) { return max_drifted_bm_tail(xx, drift, t); };
    var = "x";
  } else if (op == "hit-prob") {
    f = [&](double xx) { return hit_prob_fixed(xx, drift, t); };
    var = "x";
  } else if (op == "mean-hits") {
    f = [&](double tt) { return mean_fixed_hits(lambda, tt); };
    var = "t";
  } else if (op == "first-hit-density") {
    f = [&](double tt) { return first_hit_density(tt, x); };
    var = "t";
  } else if (op == "kernel") {
    f = [&](double yy) { return survivor_kernel(t, x, yy); };
    var = "y";
  } else if (op == "psi") {
    f = [&](double yy) { return survivor_rate(t, yy); };
    var = "y";
  } else if (op == "tau-density") {
    f = [&](double tt) { return tau_density(tt, lambda); };
    var = "t";
  } else if (op == "tau-median") {
    f = [&](double ll) { return tau_median(ll); };
    var = "lambda";
  } else if (op == "sigma-const") {
    f = [&](double dd) { return sigma_constant(dd); };
    var = "d";
  } else if (op == "k0-mean") {
    f = [&](double tt) { return k0_mean(lambda, d, tt); };
    var = "t";
  } else if (op == "speed") {
    f = [&](double vv) { return asymptotic_speed(lambda, delta, vv); };
    var = "drift";
  } else if (op == "trunc-mass") {
    f = [&](double ff) {
      return truncation_tail_mass(ff, xi_max, horizon, drift, lambda);
    };
    var = "frontier";
  } else if (op == "toy-count") {
    f = [&](double tt) {
      return static_cast<double>(
          accrete::deterministic_toy_count(lambda, delta, drift, tt));
    };
    var = "t";
  } else {
    throw std::invalid_argument("analytic: unknown operation " + op);
  }
  const double primary = [&] {
    if (var == "x") return x;
    if (var == "y") return y;
    if (var == "t") return t;
    if (var == "d") return d;
    if (var == "lambda") return lambda;
    if (var == "drift") return drift;
    if (var == "frontier") return frontier;
    return 0.0;
  }();
  if (!table.enabled) {
    print_value(f(primary));
    return 0;
  }
  if (table.n < 2) throw std::invalid_argument("analytic: table needs n >= 2");
  std::printf("%s,value\n", var.c_str());
  for (int i = 0; i < table.n; ++i) {
    const double v = table.lo + (table.hi - table.lo) * i / (table.n - 1);
    std::printf("%.15g,%.15g\n", v, f(v));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& suite, bool quick, int threads,
                 const std::string& out_dir) {
  accrete::validate::SuiteConfig cfg;
  cfg.quick = quick;
  cfg.threads = threads;
  const auto gates = accrete::validate::run_suite(suite, cfg);
  json report{{"suite", suite},
              {"quick", quick},
              {"version", accrete::kVersion},
              {"gates", json::array()}};
  std::string text;
  for (const auto& g : gates) {
    const std::string line =
        std::string(g.pass ? "PASS " : "FAIL ") + g.name + "  statistic=" +
        accrete::io::format_double(g.statistic) + " threshold=" +
        accrete::io::format_double(g.threshold) + "  [" + g.detail + "]  (" +
        accrete::io::format_double(g.seconds) + "s)";
    std::printf("%s\n", line.c_str());
    text += line + "\n";
    report["gates"].push_back({{"name", g.name},
                               {"pass", g.pass},
                               {"statistic", g.statistic},
                               {"threshold", g.threshold},
                               {"detail", g.detail},
                               {"seconds", g.seconds}});
  }
  const bool ok = accrete::validate::all_pass(gates);
  report["pass"] = ok;
  text += ok ? "ALL PASS\n" : "FAILURES PRESENT\n";
  std::printf("%s", ok ? "ALL PASS\n" : "FAILURES PRESENT\n");
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    accrete::io::open_for_write(out_dir + "/report.json")
        << report.dump(2) << '\n';
    accrete::io::open_for_write(out_dir + "/report.txt") << text;
  }
  return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"accrete: Monte Carlo lab for drifted Brownian particles "
               "absorbed by a boundary that grows by one particle size per "
               "absorption"};
  app.set_version_flag("--version", accrete::kVersion);
  app.set_config("--config", "", "read options from an INI-style file");
  app.require_subcommand(1);

  int exit_code = 0;

  // simulate
  auto* sim = app.add_subcommand("simulate", "run one replica, write CSV/JSON");
  ParamOpts sim_opts;
  sim_opts.add_to(sim);
  std::string sim_out = "run-out";
  std::uint32_t sim_replica = 0;
  bool sim_ndjson = false;
  sim->add_option("--out", sim_out, "output directory")->capture_default_str();
  sim->add_option("--replica", sim_replica, "replica index")
      ->capture_default_str();
  sim->add_flag("--events-ndjson", sim_ndjson, "also write events.ndjson");
  sim->callback([&] {
    exit_code = cmd_simulate(sim_opts, sim_out, sim_replica, sim_ndjson);
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run replicas and aggregate");
  ParamOpts sweep_opts;
  sweep_opts.add_to(sweep);
  std::string sweep_quantity = "speed";
  std::string sweep_out = "sweep-out";
  int sweep_replicas = 100;
  int sweep_threads = env_threads_default();
  double sweep_d = 1.0;
  sweep->add_option("--quantity", sweep_quantity,
                    "speed|sqrt-ratio|frozen-pair|explosion")
      ->check(CLI::IsMember({"speed", "sqrt-ratio", "frozen-pair", "explosion"}))
      ->capture_default_str();
  sweep->add_option("--replicas", sweep_replicas, "replica count")
      ->capture_default_str();
  sweep->add_option("--threads", sweep_threads, "worker threads")
      ->capture_default_str();
  sweep->add_option("--d", sweep_d, "window multiplier for frozen-pair")
      ->capture_default_str();
  sweep->add_option("--out", sweep_out, "output directory")
      ->capture_default_str();
  sweep->callback([&] {
    exit_code = cmd_sweep(sweep_opts, sweep_quantity, sweep_replicas,
                          sweep_threads, sweep_d, sweep_out);
  });

  // analytic
  auto* ana = app.add_subcommand("analytic",
                                 "evaluate a closed-form quantity");
  std::string ana_op;
  double ana_x = 1.0, ana_y = 1.0, ana_t = 1.0, ana_d = 1.0;
  double ana_lambda = 1.0, ana_delta = 1.0, ana_drift = 0.0;
  double ana_frontier = 10.0, ana_xi_max = 0.0, ana_horizon = 1.0;
  std::string ana_table;
  ana->add_option("op", ana_op,
                  "tail|hit-prob|mean-hits|first-hit-density|kernel|psi|"
                  "tau-density|tau-median|sigma-const|k0-mean|speed|"
                  "trunc-mass|toy-count")
      ->required();
  ana->add_option("--x", ana_x, "start level")->capture_default_str();
  ana->add_option("--y", ana_y, "end level")->capture_default_str();
  ana->add_option("--t", ana_t, "time")->capture_default_str();
  ana->add_option("--d", ana_d, "window multiplier")->capture_default_str();
  ana->add_option("--lambda", ana_lambda, "density")->capture_default_str();
  ana->add_option("--delta", ana_delta, "particle size")->capture_default_str();
  ana->add_option("--drift", ana_drift, "drift v")->capture_default_str();
  ana->add_option("--frontier", ana_frontier, "frontier coordinate")
      ->capture_default_str();
  ana->add_option("--xi-max", ana_xi_max, "maximum boundary level")
      ->capture_default_str();
  ana->add_option("--horizon", ana_horizon, "horizon T")->capture_default_str();
  ana->add_option("--table", ana_table,
                  "sweep the primary variable: LO:HI:N, CSV output");
  ana->callback([&] {
    TableSpec spec;
    if (!ana_table.empty()) {
      spec.enabled = true;
      if (std::sscanf(ana_table.c_str(), "%lf:%lf:%d", &spec.lo, &spec.hi,
                      &spec.n) != 3) {
        throw std::invalid_argument("analytic: --table expects LO:HI:N");
      }
    }
    exit_code = evaluate_analytic(ana_op, ana_x, ana_y, ana_t, ana_d,
                                  ana_lambda, ana_delta, ana_drift,
                                  ana_frontier, ana_xi_max, ana_horizon, spec);
  });

  // validate
  auto* val = app.add_subcommand("validate", "run reproduction gates");
  std::string val_suite = "all";
  bool val_quick = false;
  int val_threads = env_threads_default();
  std::string val_out = "validate-out";
  val->add_option("suite", val_suite,
                  "speed|sqrt|lemma-lt|tau|chains|explosion|cross-engine|"
                  "analytic|all")
      ->capture_default_str();
  val->add_flag("--quick", val_quick,
                "reduced replica counts, looser tolerances");
  val->add_option("--threads", val_threads, "worker threads")
      ->capture_default_str();
  val->add_option("--out", val_out, "report directory")->capture_default_str();
  val->callback([&] {
    exit_code = cmd_validate(val_suite, val_quick, val_threads, val_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::logic_error& e) {
    std::fprintf(stderr, "internal invariant breach: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return exit_code;
}
