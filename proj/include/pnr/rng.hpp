// Counter-based random streams.
//
// Every draw is a pure function of (seed, stream id, counter), so a pulse
// generated on any thread sees the same numbers as in a serial run.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pnr {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream + kGolden))) {}

  constexpr std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal by Box-Muller; the second variate is kept for the next call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double std_dev) { return mean + std_dev * normal(); }

  /// Poisson by inversion, truncated at mu + 12*sqrt(mu) + 20 (the discarded
  /// tail has mass below 1e-12 for every mu the simulator accepts).
  int poisson(double mu) {
    if (mu <= 0.0) return 0;
    const int cap = static_cast<int>(mu + 12.0 * std::sqrt(mu) + 20.0);
    const double u = uniform();
    double p = std::exp(-mu);
    double cdf = p;
    int k = 0;
    while (u >= cdf && k < cap) {
      ++k;
      p *= mu / k;
      cdf += p;
    }
    return k;
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pnr
