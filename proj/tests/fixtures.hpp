#pragma once

#include "pnr/core.hpp"

namespace fixtures {

/// Detector reproducing the reference Table I spectrum: spacing 135, gain
/// variance 276, extra firing variance 246, zero-peak width 10.6 and about
/// three detected photons per pulse.
inline pnr::DetectorModel table1_detector(double area_offset = 450.0, double sat = 0.0) {
  pnr::DetectorModel m;
  m.quantum_efficiency = 0.85;
  m.mean_photon_number = 3.0 / 0.85;
  m.gain_per_photon = 135.0;
  m.mult_noise_var = 276.0;
  m.electronic_noise_var = 10.6 * 10.6;
  m.extra_per_photon_var = 246.0;
  m.area_offset = area_offset;
  m.saturation_coeff = sat;
  return m;
}

}  // namespace fixtures
