#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "accrete/core.hpp"
#include "accrete/params.hpp"
#include "accrete/version.hpp"

// File outputs. Schemas are versioned through the header comment line and
// every file embeds the config hash, so any artifact can be traced back to
// the exact run that produced it. No timestamps anywhere: identical configs
// must produce byte-identical files.

namespace accrete::io {

inline constexpr const char* kCsvSchemaVersion = "v1";

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                                 std::uint64_t config) {
  auto out = open_for_write(path);
  out << "# accrete-csv " << kCsvSchemaVersion
      << " kind=trajectory config=" << hash_hex(config) << "\n";
  out << "t,xi,n_absorbed,n0,n1\n";
  for (const auto& s : traj.samples) {
    out << format_double(s.t) << ',' << format_double(s.xi) << ',' << s.n
        << ',' << s.n0 << ',' << s.n1 << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_events_csv(const std::string& path, const Trajectory& traj,
                             std::uint64_t config) {
  auto out = open_for_write(path);
  out << "# accrete-csv " << kCsvSchemaVersion
      << " kind=events config=" << hash_hex(config) << "\n";
  out << "j,t,k,hitter_origin\n";
  std::size_t j = 1;
  for (const auto& e : traj.jumps) {
    out << j++ << ',' << format_double(e.t) << ',' << e.k << ','
        << format_double(e.hitter_origin) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_events_ndjson(const std::string& path, const Trajectory& traj,
                                std::uint64_t config) {
  auto out = open_for_write(path);
  std::size_t j = 1;
  for (const auto& e : traj.jumps) {
    nlohmann::json line{{"j", j++},
                        {"t", e.t},
                        {"k", e.k},
                        {"hitter_origin", e.hitter_origin},
                        {"config", hash_hex(config)}};
    out << line.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline nlohmann::json params_json(const SystemParams& p) {
  return {{"lambda", p.lambda},
          {"delta", p.delta},
          {"drift", p.drift},
          {"horizon", p.horizon},
          {"trunc_epsilon", p.trunc_epsilon},
          {"seed", p.seed},
          {"engine", to_string(p.engine)},
          {"grid_step", p.grid_step},
          {"boundary", to_string(p.boundary)},
          {"explosion_cap", p.explosion_cap},
          {"frontier_margin", p.frontier_margin}};
}

inline void write_meta_json(const std::string& path, const SystemParams& p,
                            const Trajectory& traj, std::uint32_t replica) {
  nlohmann::json meta{
      {"schema", std::string("accrete-meta ") + kCsvSchemaVersion},
      {"version", kVersion},
      {"config", hash_hex(config_hash(p))},
      {"replica", replica},
      {"params", params_json(p)},
      {"results",
       {{"xi_final", traj.xi_final},
        {"n_final", traj.n_final},
        {"exploded", traj.exploded},
        {"events", traj.jumps.size()},
        {"truncation_bound", traj.truncation_bound},
        {"endpoint_table_fallbacks", traj.endpoint_table_fallbacks},
        {"fpt_tie_breaks", traj.fpt_tie_breaks}}}};
  auto out = open_for_write(path);
  out << meta.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace accrete::io
