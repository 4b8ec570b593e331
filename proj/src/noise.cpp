#include "pnr/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pnr {

double photon_flux(double wavelength_m, double power_w) {
  if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m))
    throw DomainError("photon_flux: wavelength must be > 0");
  if (!(power_w >= 0.0) || !std::isfinite(power_w))
    throw DomainError("photon_flux: power must be >= 0");
  return wavelength_m * power_w / (kPlanck * kSpeedOfLight);
}

void EfficiencyInput::validate() const {
  if (!(wavelength > 0.0) || !std::isfinite(wavelength))
    throw InvalidInput("wavelength: must be > 0");
  if (!(power > 0.0) || !std::isfinite(power))
    throw InvalidInput("power: must be > 0 (zero photon flux)");
  if (!(nd_transmission > 0.0 && nd_transmission <= 1.0))
    throw InvalidInput("nd_transmission: must lie in (0, 1]");
  if (!(counts >= 0.0) || !std::isfinite(counts)) throw InvalidInput("counts: must be >= 0");
  if (!(dark_counts >= 0.0) || !std::isfinite(dark_counts))
    throw InvalidInput("dark_counts: must be >= 0");
  for (double f : loss_factors)
    if (!(f > 0.0 && f <= 1.0)) throw InvalidInput("loss_factors: entries must lie in (0, 1]");
}

double intrinsic_efficiency(double raw, std::span<const double> loss_factors) {
  double through = 1.0;
  for (double f : loss_factors) {
    if (!(f > 0.0 && f <= 1.0)) throw DomainError("loss factor outside (0, 1]");
    through *= f;
  }
  return raw / through;
}

EfficiencyResult measured_efficiency(const EfficiencyInput& input) {
  input.validate();
  EfficiencyResult r;
  r.photon_flux = photon_flux(input.wavelength, input.power);
  r.raw = (input.counts - input.dark_counts) / (input.nd_transmission * r.photon_flux);
  r.intrinsic = intrinsic_efficiency(r.raw, input.loss_factors);
  if (input.counts < input.dark_counts) r.flags.emplace_back("counts below dark counts");
  if (r.raw < 0.0 || r.raw > 1.05) r.flags.emplace_back("raw efficiency outside [0, 1.05]");
  r.calibration_suspect = !r.flags.empty();
  return r;
}

double excess_noise_factor(double gain_variance, double mean_gain) {
  if (!(mean_gain != 0.0) || !std::isfinite(mean_gain))
    throw DomainError("excess_noise_factor: mean gain must be non-zero");
  return 1.0 + gain_variance / (mean_gain * mean_gain);
}

double n_max(double enf) {
  if (std::isnan(enf) || enf < 1.0) throw DomainError("n_max: excess noise factor must be >= 1");
  if (enf == 1.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (enf - 1.0);
}

NoiseReport variance_law(std::span<const GaussianPeak> peaks) {
  if (peaks.size() < 3) throw InvalidInput("variance_law: need at least 3 peaks");
  std::vector<GaussianPeak> sorted(peaks.begin(), peaks.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  if (sorted.front().index != 0)
    throw InvalidInput("variance_law: the zero-photon peak is required");
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].index == sorted[i - 1].index)
      throw InvalidInput("variance_law: duplicate photon number");

  NoiseReport r;
  r.electronic_var = sorted.front().std_dev * sorted.front().std_dev;
  std::vector<Point> pts;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    pts.push_back({static_cast<double>(sorted[i].index),
                   sorted[i].std_dev * sorted[i].std_dev - r.electronic_var});
  const LineFit fit = linear_fit(pts);
  r.sigma_m_sq = fit.slope;
  r.sigma_0_sq = fit.intercept;
  r.regression_residual = fit.residual;

  const auto& first = sorted.front();
  const auto& last = sorted.back();
  r.spacing = (last.mean - first.mean) / static_cast<double>(last.index - first.index);
  r.enf = excess_noise_factor(r.sigma_m_sq, r.spacing);
  r.n_max_unbounded = !(r.enf > 1.0);
  r.n_max = r.n_max_unbounded ? std::numeric_limits<double>::infinity() : n_max(r.enf);
  return r;
}

}  // namespace pnr
