// Photon-number decision rules built from a fitted mixture.
//
// Decision i covers the half-open interval (t_i, t_{i+1}] with t_0 = -inf and
// t_K = +inf; an area exactly on a threshold goes to the lower number.
//
// The error of number i is the mass of every other peak inside region i,
// each peak unit-normalized and scaled by its prior relative to prior i:
//   error_i = sum_{j != i} (prior_j / prior_i) * P_j(region i),
// clamped to 1. With equal priors this is the plain sum of foreign peak
// areas in the region.
#pragma once

#include <span>
#include <vector>

#include "pnr/core.hpp"

namespace pnr {

enum class PriorMode { Equal, FromWeights };

struct ConfusionMatrix {
  std::vector<std::vector<double>> matrix;  // (i, j) = P(decide j | true i)
  std::vector<double> priors;
};

/// Crossing point of two unit-area normal densities between their means.
/// Falls back to the midpoint when the variances agree to 1e-12 relative.
/// Throws DomainError when no crossing exists between the means.
double threshold(double mean_lo, double sd_lo, double mean_hi, double sd_hi);

/// Crossing of prior-weighted densities by bisection between the means.
double weighted_threshold(double mean_lo, double sd_lo, double prior_lo, double mean_hi,
                          double sd_hi, double prior_hi);

/// Peaks must have strictly increasing means.
DecisionScheme build_scheme(std::span<const GaussianPeak> peaks, PriorMode mode);
DecisionScheme build_scheme(const MixtureModel& model, PriorMode mode);
/// Explicit priors; equal entries give the closed-form thresholds.
DecisionScheme build_scheme(std::span<const GaussianPeak> peaks, std::span<const double> priors);

int classify(double area, const DecisionScheme& scheme);

/// Binary discrimination of one detection from two or more, using the
/// thresholds of the full scheme. Returns the prior-weighted probability that
/// a true 1 lands above t_2 or a true n >= 2 lands in (t_1, t_2], normalized
/// by the prior mass of numbers >= 1.
double one_vs_many_error(std::span<const GaussianPeak> peaks, std::span<const double> priors);
double one_vs_many_error(const MixtureModel& model, std::span<const double> priors);

ConfusionMatrix confusion(std::span<const GaussianPeak> peaks, std::span<const double> priors);
ConfusionMatrix confusion(const MixtureModel& model, std::span<const double> priors);

std::vector<double> equal_priors(std::size_t k);

}  // namespace pnr
