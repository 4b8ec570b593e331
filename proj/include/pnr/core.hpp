// Domain types and numerical primitives shared by every pnr-lab module.
//
// Pulse areas are expressed in arbitrary integrator (ADC) units throughout;
// only dimensionless ratios such as the excess noise factor are physical.
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pnr {

// ----------------------------------------------------------------------------
// Errors
// ----------------------------------------------------------------------------

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Input data or configuration that fails validation.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Request exceeds a fixed storage budget.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// ----------------------------------------------------------------------------
// Domain types
// ----------------------------------------------------------------------------

/// Source, detector and electronics noise chain of a photon-number-resolving
/// detector. A pulse with d surviving detections has mean area
/// area_offset + d*gain_per_photon - d*d*saturation_coeff and variance
/// electronic_noise_var + [d>0]*extra_per_photon_var + d*mult_noise_var.
struct DetectorModel {
  double mean_photon_number = 0.0;    // Poisson source mean per pulse
  double quantum_efficiency = 1.0;    // detection probability per photon
  double gain_per_photon = 1.0;       // mean area of one detection
  double mult_noise_var = 0.0;        // per-detection gain variance
  double electronic_noise_var = 0.0;  // zero-photon peak variance
  double extra_per_photon_var = 0.0;  // additive variance when d >= 1
  double area_offset = 0.0;           // integrator pedestal
  double saturation_coeff = 0.0;      // quadratic mean correction
  double dark_rate_per_gate = 0.0;    // mean dark detections per gate
  std::optional<std::uint64_t> cell_count;  // nullopt: infinitely many cells

  /// Throws InvalidInput naming the first offending field.
  void validate() const;

  double mean_area(int detections) const;
  double area_variance(int detections) const;
};

/// Binned pulse-area spectrum. Edges are strictly increasing; counts has one
/// entry per bin. Pulses falling outside the edges are tracked separately.
class Histogram {
 public:
  Histogram() = default;
  Histogram(std::vector<double> edges, std::vector<std::uint64_t> counts,
            std::uint64_t underflow = 0, std::uint64_t overflow = 0);

  /// Equal-width bins covering [lo, lo + n*width).
  static Histogram uniform(double lo, double width, std::size_t n_bins);

  std::span<const double> edges() const { return edges_; }
  std::span<const std::uint64_t> counts() const { return counts_; }
  std::size_t bin_count() const { return counts_.size(); }
  double bin_left(std::size_t b) const { return edges_[b]; }
  double bin_right(std::size_t b) const { return edges_[b + 1]; }
  double bin_center(std::size_t b) const { return 0.5 * (edges_[b] + edges_[b + 1]); }
  std::uint64_t underflow() const { return underflow_; }
  std::uint64_t overflow() const { return overflow_; }
  std::uint64_t in_range() const;
  std::uint64_t total_pulses() const { return in_range() + underflow_ + overflow_; }
  std::size_t nonempty_bins() const;

  /// Index of the bin containing x (left-closed; the last bin is also
  /// right-closed), or nullopt if x is outside the edges.
  std::optional<std::size_t> find_bin(double x) const;
  void add(double x);

  Histogram shifted(double c) const;

  friend bool operator==(const Histogram&, const Histogram&) = default;

 private:
  std::vector<double> edges_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t underflow_ = 0;
  std::uint64_t overflow_ = 0;
};

/// One photon-number peak of a mixture.
struct GaussianPeak {
  int index = 0;        // photon number
  double mean = 0.0;
  double std_dev = 1.0;
  double weight = 0.0;  // fraction of pulses
};

enum class ConstraintKind { FreeWeightsFreeSigmas, PoissonWeights, LinearVariance };

std::string_view to_string(ConstraintKind kind);
ConstraintKind constraint_from_string(std::string_view name);

/// Parameters of the linear variance law sigma_i^2 = elec + [i>0]*extra + i*mult.
struct VarianceLaw {
  double electronic_var = 0.0;
  double extra_var = 0.0;
  double mult_var = 0.0;

  double variance(int i) const {
    return electronic_var + (i > 0 ? extra_var : 0.0) + i * mult_var;
  }
};

/// Gaussian mixture over photon numbers 0..K-1 whose means follow the
/// quadratic ladder x_i = x0 + i*spacing - i^2*sat. Means are never stored;
/// peaks() derives them, so the ladder holds exactly for every instance.
class MixtureModel {
 public:
  /// Free weights and free widths.
  static MixtureModel free(double x0, double spacing, double sat,
                           std::vector<double> std_devs, std::vector<double> weights);
  /// Free widths, weights from a Poisson law renormalized over the K peaks.
  static MixtureModel poisson(double x0, double spacing, double sat,
                              std::vector<double> std_devs, double mu);
  /// Widths from a VarianceLaw, free weights.
  static MixtureModel linear_variance(double x0, double spacing, double sat,
                                      const VarianceLaw& law, std::vector<double> weights);

  std::size_t size() const { return std_devs_.size(); }
  double x0() const { return x0_; }
  double spacing() const { return spacing_; }
  double sat() const { return sat_; }
  ConstraintKind constraint() const { return kind_; }
  std::optional<double> poisson_mu() const { return mu_; }
  std::optional<VarianceLaw> variance_law() const { return law_; }

  double mean(int i) const { return x0_ + i * spacing_ - double(i) * i * sat_; }
  std::span<const double> std_devs() const { return std_devs_; }
  std::span<const double> weights() const { return weights_; }
  std::vector<GaussianPeak> peaks() const;

  /// Poisson probabilities renormalized over photon numbers 0..k-1.
  static std::vector<double> truncated_poisson(double mu, std::size_t k);

 private:
  MixtureModel() = default;
  void check() const;

  double x0_ = 0.0;
  double spacing_ = 0.0;
  double sat_ = 0.0;
  std::vector<double> std_devs_;
  std::vector<double> weights_;
  ConstraintKind kind_ = ConstraintKind::FreeWeightsFreeSigmas;
  std::optional<double> mu_;
  std::optional<VarianceLaw> law_;
};

/// Ordered thresholds t_1..t_{K-1}; decision i covers (t_i, t_{i+1}].
struct DecisionScheme {
  std::vector<double> thresholds;
  std::vector<double> priors;
  std::vector<double> error_per_number;
};

/// Variance-law regression results and the figures of merit derived from it.
struct NoiseReport {
  double sigma_m_sq = 0.0;
  double sigma_0_sq = 0.0;
  double electronic_var = 0.0;
  double spacing = 0.0;
  double enf = 1.0;
  double n_max = std::numeric_limits<double>::infinity();
  bool n_max_unbounded = true;
  double regression_residual = 0.0;
};

// ----------------------------------------------------------------------------
// Numerical primitives
// ----------------------------------------------------------------------------

double gaussian_pdf(double x, double mean, double std_dev);

/// Normal CDF. x = -inf maps to 0 and +inf to 1; any other non-finite
/// argument or std_dev <= 0 throws DomainError.
double gaussian_cdf(double x, double mean, double std_dev);

/// Probability mass of N(mean, std_dev) inside (lo, hi]. Uses the upper tail
/// on the right of the mean so that tiny masses keep their relative precision.
double gaussian_mass(double lo, double hi, double mean, double std_dev);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // weighted sum of squared residuals
};

/// Weighted least-squares line. Throws DomainError if all x are equal or a
/// weight is negative; throws InvalidInput if weights has the wrong length.
LineFit linear_fit(std::span<const Point> points, std::span<const double> weights = {});

}  // namespace pnr
