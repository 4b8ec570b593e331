// Monte Carlo generation of pulse-area spectra.
//
// Each pulse draws its photon count, thins it by the quantum efficiency, adds
// dark detections, optionally discards detections that land on an already
// fired cell, then sums one Gaussian gain per surviving detection plus the
// electronic noise. The gain mean of the k-th detection is
// gain_per_photon - (2k-1)*saturation_coeff, which makes the d-detection mean
// exactly area_offset + d*gain - d^2*saturation_coeff.
//
// The OpenMP kernels and their serial references produce bit-identical output
// for any thread count: pulse i always draws from stream i of the seed.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pnr/core.hpp"
#include "pnr/rng.hpp"

namespace pnr {

struct SimConfig {
  DetectorModel model;
  std::uint64_t n_pulses = 1;
  std::uint64_t seed = 0;
  std::optional<double> bin_width;  // nullopt: gain_per_photon / 12

  void validate() const;
  double effective_bin_width() const;
};

struct PulseRecord {
  int true_incident = 0;
  int true_detected = 0;  // surviving detections, dark ones included
  double area = 0.0;

  friend bool operator==(const PulseRecord&, const PulseRecord&) = default;
};

struct SimResult {
  std::vector<PulseRecord> pulses;
  Histogram histogram;
};

/// Upper bound on pulses held in memory by a single run.
inline constexpr std::uint64_t kMaxPulses = 50'000'000;

/// One pulse. The model must already be validated.
PulseRecord sample_pulse(const DetectorModel& model, CounterRng& rng);

std::vector<PulseRecord> generate_pulses_serial(const DetectorModel& model, std::uint64_t n,
                                                std::uint64_t seed);
/// threads <= 0 uses the OpenMP default.
std::vector<PulseRecord> generate_pulses_parallel(const DetectorModel& model, std::uint64_t n,
                                                  std::uint64_t seed, int threads = 0);

/// Equal-width bins starting at the smallest area and covering the largest.
Histogram bin_pulses_serial(std::span<const PulseRecord> pulses, double bin_width);
Histogram bin_pulses_parallel(std::span<const PulseRecord> pulses, double bin_width,
                              int threads = 0);

SimResult run(const SimConfig& config, int threads = 0);
SimResult run_serial(const SimConfig& config);

}  // namespace pnr
