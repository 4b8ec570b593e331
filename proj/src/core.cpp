#include "pnr/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>

namespace pnr {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw InvalidInput(std::string(field) + ": " + what);
}

}  // namespace

// ----------------------------------------------------------------------------
// DetectorModel
// ----------------------------------------------------------------------------

void DetectorModel::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  require(finite(mean_photon_number) && mean_photon_number >= 0.0, "mean_photon_number",
          "must be finite and >= 0");
  require(finite(quantum_efficiency) && quantum_efficiency >= 0.0 && quantum_efficiency <= 1.0,
          "quantum_efficiency", "must lie in [0, 1]");
  require(finite(gain_per_photon) && gain_per_photon > 0.0, "gain_per_photon", "must be > 0");
  require(finite(mult_noise_var) && mult_noise_var >= 0.0, "mult_noise_var", "must be >= 0");
  require(finite(electronic_noise_var) && electronic_noise_var >= 0.0, "electronic_noise_var",
          "must be >= 0");
  require(finite(extra_per_photon_var) && extra_per_photon_var >= 0.0, "extra_per_photon_var",
          "must be >= 0");
  require(finite(area_offset), "area_offset", "must be finite");
  require(finite(saturation_coeff), "saturation_coeff", "must be finite");
  require(finite(dark_rate_per_gate) && dark_rate_per_gate >= 0.0, "dark_rate_per_gate",
          "must be >= 0");
  require(!cell_count || *cell_count > 0, "cell_count", "must be positive or infinite");
  // Poisson sampling by inversion underflows exp(-mu) beyond ~700.
  require(mean_photon_number * quantum_efficiency + dark_rate_per_gate < 500.0,
          "mean_photon_number", "detected mean above 500 is not supported");
}

double DetectorModel::mean_area(int detections) const {
  const double d = detections;
  return area_offset + d * gain_per_photon - d * d * saturation_coeff;
}

double DetectorModel::area_variance(int detections) const {
  return electronic_noise_var + (detections > 0 ? extra_per_photon_var : 0.0) +
         detections * mult_noise_var;
}

// ----------------------------------------------------------------------------
// Histogram
// ----------------------------------------------------------------------------

Histogram::Histogram(std::vector<double> edges, std::vector<std::uint64_t> counts,
                     std::uint64_t underflow, std::uint64_t overflow)
    : edges_(std::move(edges)), counts_(std::move(counts)), underflow_(underflow),
      overflow_(overflow) {
  if (edges_.size() < 2) throw InvalidInput("histogram: need at least two bin edges");
  if (counts_.size() + 1 != edges_.size())
    throw InvalidInput("histogram: counts must have one entry per bin");
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (!std::isfinite(edges_[i])) throw InvalidInput("histogram: non-finite bin edge");
    if (i > 0 && !(edges_[i] > edges_[i - 1]))
      throw InvalidInput("histogram: bin edges must be strictly increasing");
  }
}

Histogram Histogram::uniform(double lo, double width, std::size_t n_bins) {
  if (!(width > 0.0) || n_bins == 0) throw InvalidInput("histogram: bad uniform binning");
  std::vector<double> edges(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) edges[i] = lo + static_cast<double>(i) * width;
  return Histogram(std::move(edges), std::vector<std::uint64_t>(n_bins, 0));
}

std::uint64_t Histogram::in_range() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::size_t Histogram::nonempty_bins() const {
  return static_cast<std::size_t>(
      std::count_if(counts_.begin(), counts_.end(), [](auto c) { return c > 0; }));
}

std::optional<std::size_t> Histogram::find_bin(double x) const {
  if (!(x >= edges_.front()) || x > edges_.back()) return std::nullopt;
  if (x == edges_.back()) return counts_.size() - 1;
  auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  return static_cast<std::size_t>(it - edges_.begin()) - 1;
}

void Histogram::add(double x) {
  if (auto b = find_bin(x)) {
    ++counts_[*b];
  } else if (x < edges_.front()) {
    ++underflow_;
  } else {
    ++overflow_;
  }
}

Histogram Histogram::shifted(double c) const {
  std::vector<double> e(edges_);
  for (auto& v : e) v += c;
  return Histogram(std::move(e), counts_, underflow_, overflow_);
}

// ----------------------------------------------------------------------------
// MixtureModel
// ----------------------------------------------------------------------------

std::string_view to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::FreeWeightsFreeSigmas: return "FREE_WEIGHTS_FREE_SIGMAS";
    case ConstraintKind::PoissonWeights: return "POISSON_WEIGHTS";
    case ConstraintKind::LinearVariance: return "LINEAR_VARIANCE";
  }
  return "?";
}

ConstraintKind constraint_from_string(std::string_view name) {
  if (name == "FREE_WEIGHTS_FREE_SIGMAS" || name == "FREE") return ConstraintKind::FreeWeightsFreeSigmas;
  if (name == "POISSON_WEIGHTS" || name == "POISSON") return ConstraintKind::PoissonWeights;
  if (name == "LINEAR_VARIANCE") return ConstraintKind::LinearVariance;
  throw InvalidInput("constraint: unknown kind '" + std::string(name) + "'");
}

std::vector<double> MixtureModel::truncated_poisson(double mu, std::size_t k) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw DomainError("poisson mean must be finite and >= 0");
  std::vector<double> w(k);
  // log-space terms avoid overflow of mu^i for large i
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    const double di = static_cast<double>(i);
    w[i] = (mu == 0.0) ? (i == 0 ? 0.0 : -std::numeric_limits<double>::infinity())
                       : di * std::log(mu) - std::lgamma(di + 1.0);
    peak = std::max(peak, w[i]);
  }
  double sum = 0.0;
  for (auto& v : w) sum += (v = std::exp(v - peak));
  for (auto& v : w) v /= sum;
  return w;
}

void MixtureModel::check() const {
  if (std_devs_.empty()) throw InvalidInput("mixture: at least one peak required");
  if (weights_.size() != std_devs_.size())
    throw InvalidInput("mixture: weights and std_devs differ in length");
  if (!std::isfinite(x0_) || !std::isfinite(spacing_) || !std::isfinite(sat_))
    throw InvalidInput("mixture: non-finite ladder parameter");
  double sum = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!(std_devs_[i] > 0.0) || !std::isfinite(std_devs_[i]))
      throw InvalidInput("mixture: std_dev must be > 0");
    if (!(weights_[i] >= 0.0)) throw InvalidInput("mixture: weight must be >= 0");
    sum += weights_[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("mixture: weights must sum to 1");
}

MixtureModel MixtureModel::free(double x0, double spacing, double sat,
                                std::vector<double> std_devs, std::vector<double> weights) {
  MixtureModel m;
  m.x0_ = x0;
  m.spacing_ = spacing;
  m.sat_ = sat;
  m.std_devs_ = std::move(std_devs);
  m.weights_ = std::move(weights);
  m.kind_ = ConstraintKind::FreeWeightsFreeSigmas;
  m.check();
  return m;
}

MixtureModel MixtureModel::poisson(double x0, double spacing, double sat,
                                   std::vector<double> std_devs, double mu) {
  MixtureModel m;
  m.x0_ = x0;
  m.spacing_ = spacing;
  m.sat_ = sat;
  m.weights_ = truncated_poisson(mu, std_devs.size());
  m.std_devs_ = std::move(std_devs);
  m.kind_ = ConstraintKind::PoissonWeights;
  m.mu_ = mu;
  m.check();
  return m;
}

MixtureModel MixtureModel::linear_variance(double x0, double spacing, double sat,
                                           const VarianceLaw& law, std::vector<double> weights) {
  if (!(law.electronic_var >= 0.0) || !(law.extra_var >= 0.0) || !(law.mult_var >= 0.0))
    throw InvalidInput("mixture: variance-law terms must be >= 0");
  MixtureModel m;
  m.x0_ = x0;
  m.spacing_ = spacing;
  m.sat_ = sat;
  m.std_devs_.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    m.std_devs_[i] = std::sqrt(law.variance(static_cast<int>(i)));
  m.weights_ = std::move(weights);
  m.kind_ = ConstraintKind::LinearVariance;
  m.law_ = law;
  m.check();
  return m;
}

std::vector<GaussianPeak> MixtureModel::peaks() const {
  std::vector<GaussianPeak> out(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const int k = static_cast<int>(i);
    out[i] = {k, mean(k), std_devs_[i], weights_[i]};
  }
  return out;
}

// ----------------------------------------------------------------------------
// Numerical primitives
// ----------------------------------------------------------------------------

double gaussian_pdf(double x, double mean, double std_dev) {
  if (!(std_dev > 0.0)) throw DomainError("gaussian_pdf: std_dev must be > 0");
  const double z = (x - mean) / std_dev;
  return std::exp(-0.5 * z * z) / (std_dev * std::sqrt(2.0 * std::numbers::pi));
}

double gaussian_cdf(double x, double mean, double std_dev) {
  if (!std::isfinite(mean) || !std::isfinite(std_dev) || !(std_dev > 0.0))
    throw DomainError("gaussian_cdf: mean must be finite and std_dev > 0");
  if (std::isnan(x)) throw DomainError("gaussian_cdf: x is NaN");
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  return 0.5 * std::erfc(-(x - mean) / (std_dev * std::numbers::sqrt2));
}

double gaussian_mass(double lo, double hi, double mean, double std_dev) {
  if (!(hi > lo)) return 0.0;
  if (lo >= mean) {
    // both edges on the upper side: difference of upper tails
    return gaussian_cdf(2.0 * mean - lo, mean, std_dev) - gaussian_cdf(2.0 * mean - hi, mean, std_dev);
  }
  return gaussian_cdf(hi, mean, std_dev) - gaussian_cdf(lo, mean, std_dev);
}

LineFit linear_fit(std::span<const Point> points, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != points.size())
    throw InvalidInput("linear_fit: weights must match points");

  // Sorting fixes the summation order, so the result is independent of the
  // order in which points are supplied.
  std::vector<std::tuple<double, double, double>> rows;
  rows.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w >= 0.0)) throw DomainError("linear_fit: negative weight");
    rows.emplace_back(points[i].x, points[i].y, w);
  }
  std::sort(rows.begin(), rows.end());

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (auto [x, y, w] : rows) {
    sw += w;
    sx += w * x;
    sy += w * y;
  }
  if (!(sw > 0.0)) throw DomainError("linear_fit: degenerate design (no weight)");
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (auto [x, y, w] : rows) {
    sxx += w * (x - mx) * (x - mx);
    sxy += w * (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw DomainError("linear_fit: degenerate design (all x equal)");

  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (auto [x, y, w] : rows) {
    const double r = y - (fit.intercept + fit.slope * x);
    fit.residual += w * r * r;
  }
  return fit;
}

}  // namespace pnr
