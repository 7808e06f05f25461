#pragma once

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based randomness. Philox4x64-10 makes every variate a pure
// function of (seed, replica, stream, draw index), so lazily materialized
// particles and thread scheduling can never perturb each other's streams.

namespace accrete {

namespace philox {

inline constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
inline constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
inline constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

using Block = std::array<std::uint64_t, 4>;

inline Block philox4x64_10(Block ctr, std::uint64_t key0, std::uint64_t key1) {
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMult0, ctr[0], hi0, lo0);
    mulhilo(kMult1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key0, lo1, hi0 ^ ctr[3] ^ key1, lo0};
    key0 += kWeyl0;
    key1 += kWeyl1;
  }
  return ctr;
}

} // namespace philox

// One logical stream of variates, identified by (seed, replica, stream id).
// Value semantics; copy freely, never share one instance across threads.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint32_t replica, std::uint32_t stream)
      : key0_(seed),
        key1_((static_cast<std::uint64_t>(replica) << 32) | stream) {}

  std::uint64_t next_u64() {
    if (buffer_pos_ == 4) refill();
    return buffer_[buffer_pos_++];
  }

  // Uniform on the open interval (0, 1); never returns an exact endpoint,
  // so log(u) and 1/u are always finite.
  double u01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(u01()); }

  // Box-Muller pair; the second variate is cached.
  double normal() {
    if (have_cached_normal_) {
      have_cached_normal_ = false;
      return cached_normal_;
    }
    const double r = std::sqrt(-2.0 * std::log(u01()));
    const double theta = 6.28318530717958647693 * u01();
    cached_normal_ = r * std::sin(theta);
    have_cached_normal_ = true;
    return r * std::cos(theta);
  }

  // Poisson sampling: exact sequential inversion for small means, Hormann's
  // PTRS transformed rejection above it.
  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) return poisson_inversion(mean);
    return poisson_ptrs(mean);
  }

 private:
  void refill() {
    philox::Block ctr{block_index_++, 0, 0, 0};
    buffer_ = philox::philox4x64_10(ctr, key0_, key1_);
    buffer_pos_ = 0;
  }

  long long poisson_inversion(double mean) {
    const double limit = std::exp(-mean);
    long long k = 0;
    double prod = u01();
    while (prod > limit) {
      ++k;
      prod *= u01();
    }
    return k;
  }

  long long poisson_ptrs(double mean) {
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    while (true) {
      const double u = u01() - 0.5;
      const double v = u01();
      const double us = 0.5 - std::abs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      const double k = kf;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          k * log_mean - mean - std::lgamma(k + 1.0)) {
        return static_cast<long long>(kf);
      }
    }
  }

  std::uint64_t key0_;
  std::uint64_t key1_;
  std::uint64_t block_index_ = 0;
  philox::Block buffer_{};
  int buffer_pos_ = 4;
  double cached_normal_ = 0.0;
  bool have_cached_normal_ = false;
};

// Stream-id conventions used by the engines. Particle streams are indexed
// by materialization order; field chunks live in their own id plane so that
// extending the frontier can never disturb particle randomness.
inline constexpr std::uint32_t kFieldStreamBase = 0x80000000u;
inline constexpr std::uint32_t kControlStream = 0x7FFFFFFFu;

inline std::uint32_t particle_stream(std::uint64_t particle_index) {
  return static_cast<std::uint32_t>((particle_index + 1) & 0x7FFFFFFFu);
}

} // namespace accrete
