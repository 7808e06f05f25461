#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "accrete/rng.hpp"
#include "accrete/sampling.hpp"

namespace accrete {

// Lazily materialized slice of the infinite Poisson configuration on the
// positive half-line. Positions are generated in fixed absolute chunks,
// each chunk from its own counter-based stream, so the materialized prefix
// is a pure function of (seed, replica) no matter how the frontier was
// grown. Initial positions only; live particle state belongs to the engine.
class ParticleField {
 public:
  ParticleField(double lambda, std::uint64_t seed, std::uint32_t replica)
      : lambda_(lambda), seed_(seed), replica_(replica),
        chunk_len_(8.0 / lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("ParticleField: lambda must be > 0");
  }

  // Materialize chunks until the frontier covers `target`.
  void extend_to(double target) {
    while (frontier() < target) {
      const double a = chunks_done_ * chunk_len_;
      const double b = a + chunk_len_;
      RngStream rng(seed_, replica_,
                    kFieldStreamBase + static_cast<std::uint32_t>(chunks_done_));
      auto pts = sampling::poisson_field(lambda_, a, b, rng);
      positions_.insert(positions_.end(), pts.begin(), pts.end());
      ++chunks_done_;
    }
  }

  double frontier() const { return chunks_done_ * chunk_len_; }

  std::span<const double> positions() const { return positions_; }

  std::size_t size() const { return positions_.size(); }

 private:
  double lambda_;
  std::uint64_t seed_;
  std::uint32_t replica_;
  double chunk_len_;
  std::uint64_t chunks_done_ = 0;
  std::vector<double> positions_;
};

} // namespace accrete
