// Detector figures of merit: the variance law of the photon-number peaks,
// excess noise factor, resolvability bound and quantum-efficiency calibration.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "pnr/core.hpp"

namespace pnr {

inline constexpr double kPlanck = 6.62607015e-34;       // J s, exact (SI 2019)
inline constexpr double kSpeedOfLight = 2.99792458e8;   // m/s, exact

/// Photons per second carried by a monochromatic beam.
double photon_flux(double wavelength_m, double power_w);

struct EfficiencyInput {
  double wavelength = 0.0;       // m
  double power = 0.0;            // W, before the attenuators
  double nd_transmission = 1.0;  // combined attenuator transmission
  double counts = 0.0;           // detector count rate, 1/s
  double dark_counts = 0.0;      // count rate with the beam blocked, 1/s
  std::vector<double> loss_factors;  // transmissions of the optical path

  void validate() const;
};

struct EfficiencyResult {
  double photon_flux = 0.0;   // incident on the attenuators
  double raw = 0.0;           // (counts - dark) / (transmission * flux)
  double intrinsic = 0.0;     // raw / prod(loss_factors)
  bool calibration_suspect = false;
  std::vector<std::string> flags;
};

EfficiencyResult measured_efficiency(const EfficiencyInput& input);

/// Efficiency with the optical path losses divided out.
double intrinsic_efficiency(double raw, std::span<const double> loss_factors);

/// Subtracts the zero-peak variance, regresses the remaining variances on
/// photon number over peaks i >= 1, and derives F = 1 + slope / spacing^2
/// with spacing the mean gap between adjacent supplied means.
NoiseReport variance_law(std::span<const GaussianPeak> peaks);

/// Largest resolvable photon number 1 / (F - 1); +inf for F == 1.
double n_max(double enf);

/// F = 1 + gain variance / gain^2.
double excess_noise_factor(double gain_variance, double mean_gain);

}  // namespace pnr
