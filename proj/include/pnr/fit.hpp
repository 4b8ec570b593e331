// Constrained Gaussian-mixture fits of pulse-area histograms.
//
// The objective is the Poisson-weighted binned least squares
//   sum_b (c_b - N * P_b)^2 / max(c_b, 1)
// where P_b is the model probability of bin b (difference of normal CDFs
// across the bin) and N the total pulse count. It is minimized by a
// Levenberg-Marquardt iteration over unconstrained coordinates: softmax
// logits for free weights, log mu for Poisson weights and logarithms for
// every width or variance term.
#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pnr/core.hpp"

namespace pnr {

/// Upper end of the fitted area range. Auto stops a quarter spacing above
/// the last peak of the starting model, so pulses with K or more detections
/// do not leak into the top peak; None fits every bin against all pulses.
enum class CutoffMode { Auto, None, Fixed };

struct FitConfig {
  std::optional<int> n_peaks;  // nullopt: choose from the histogram
  ConstraintKind constraint = ConstraintKind::FreeWeightsFreeSigmas;
  int max_iterations = 500;
  double tolerance = 1e-9;  // relative objective decrease
  std::optional<MixtureModel> init;
  CutoffMode cutoff = CutoffMode::Auto;
  double cutoff_area = 0.0;  // used with CutoffMode::Fixed

  void validate() const;
};

struct FitReport {
  MixtureModel model;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double last_relative_decrease = 0.0;
  std::vector<GaussianPeak> per_peak;
  std::vector<double> objective_trace;  // objective after every accepted step
  std::vector<std::string> warnings;
  double fit_upper = std::numeric_limits<double>::infinity();  // +inf: every bin
};

/// Locations (area units) of prominent maxima of the 5-bin moving average.
/// A maximum exceeds both neighbours (one at the histogram ends) and 2% of
/// the largest smoothed value; a flat run of equal values counts once, at
/// its centre.
std::vector<double> prominent_maxima(const Histogram& hist);

/// Starting model read off the histogram: x0 at the first prominent
/// maximum, spacing the median gap between maxima, sat = 0, widths
/// spacing/4 and weights from the counts between ladder midpoints.
/// Without n_peaks the peak count is the number of maxima plus two.
MixtureModel init_guess(const Histogram& hist, std::optional<int> n_peaks = std::nullopt);

FitReport fit_spectrum(const Histogram& hist, const FitConfig& config);

/// Objective of a given model against the bins whose centres lie below
/// upper. With a finite upper that excludes bins, the model is conditioned
/// on the window: expected counts are scaled to the pulses inside it.
double fit_objective(const Histogram& hist, const MixtureModel& model,
                     double upper = std::numeric_limits<double>::infinity());

/// Expected counts per bin, normalized as in fit_objective; peak >= 0
/// restricts to a single component.
std::vector<double> expected_counts(const Histogram& hist, const MixtureModel& model,
                                    int peak = -1,
                                    double upper = std::numeric_limits<double>::infinity());

}  // namespace pnr
