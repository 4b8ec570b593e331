#include "pnr/discriminate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pnr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_peaks(std::span<const GaussianPeak> peaks) {
  if (peaks.size() < 2) throw InvalidInput("decision scheme: need at least two peaks");
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    if (!(peaks[i].std_dev > 0.0) || !std::isfinite(peaks[i].mean))
      throw InvalidInput("decision scheme: invalid peak " + std::to_string(i));
    if (i > 0 && !(peaks[i].mean > peaks[i - 1].mean))
      throw InvalidInput("decision scheme: peak means must be strictly increasing");
  }
}

std::vector<double> normalized(std::span<const double> priors, std::size_t k) {
  if (priors.size() != k) throw InvalidInput("priors: need one entry per peak");
  const double sum = std::accumulate(priors.begin(), priors.end(), 0.0);
  for (double p : priors)
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInput("priors: entries must be >= 0");
  if (!(sum > 0.0)) throw InvalidInput("priors: must not all be zero");
  std::vector<double> out(priors.begin(), priors.end());
  for (auto& p : out) p /= sum;
  return out;
}

bool all_equal(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double region_lo(const DecisionScheme& s, std::size_t i) { return i == 0 ? -kInf : s.thresholds[i - 1]; }
double region_hi(const DecisionScheme& s, std::size_t i) {
  return i == s.thresholds.size() ? kInf : s.thresholds[i];
}

std::vector<double> equal_prior_thresholds(std::span<const GaussianPeak> peaks) {
  std::vector<double> t(peaks.size() - 1);
  for (std::size_t i = 0; i + 1 < peaks.size(); ++i)
    t[i] = threshold(peaks[i].mean, peaks[i].std_dev, peaks[i + 1].mean, peaks[i + 1].std_dev);
  return t;
}

}  // namespace

std::vector<double> equal_priors(std::size_t k) {
  return std::vector<double>(k, 1.0 / static_cast<double>(k));
}

double threshold(double mean_lo, double sd_lo, double mean_hi, double sd_hi) {
  if (!(sd_lo > 0.0) || !(sd_hi > 0.0)) throw DomainError("threshold: widths must be > 0");
  if (!(mean_hi > mean_lo)) throw DomainError("threshold: means must be increasing");
  const double a = sd_lo * sd_lo, b = sd_hi * sd_hi;
  const double gap = mean_hi - mean_lo;
  if (std::abs(b - a) < 1e-12 * a) return 0.5 * (mean_lo + mean_hi);

  // Larger root of (b-a) y^2 + 2 a gap y - a gap^2 - 2 a b ln(sd_hi/sd_lo) = 0,
  // y = x - mean_lo, written without the 1/(b-a) factor so that nearly equal
  // widths do not cancel catastrophically.
  const double log_ratio = std::log(sd_hi / sd_lo);
  const double radicand = gap * gap + 2.0 * (b - a) * log_ratio;
  if (radicand < 0.0) throw DomainError("threshold: densities do not intersect");
  const double root = std::sqrt(radicand);
  const double y = a * (gap * gap + 2.0 * b * log_ratio) / (sd_lo * sd_hi * root + a * gap);
  if (!(y > 0.0 && y < gap))
    throw DomainError("threshold: no density intersection between the means");
  return mean_lo + y;
}

double weighted_threshold(double mean_lo, double sd_lo, double prior_lo, double mean_hi,
                          double sd_hi, double prior_hi) {
  if (!(sd_lo > 0.0) || !(sd_hi > 0.0)) throw DomainError("threshold: widths must be > 0");
  if (!(mean_hi > mean_lo)) throw DomainError("threshold: means must be increasing");
  if (!(prior_lo > 0.0) || !(prior_hi > 0.0))
    throw DomainError("threshold: priors of adjacent peaks must be > 0");
  // log(prior_lo * pdf_lo) - log(prior_hi * pdf_hi)
  auto diff = [&](double x) {
    const double zl = (x - mean_lo) / sd_lo, zh = (x - mean_hi) / sd_hi;
    return std::log(prior_lo / sd_lo) - 0.5 * zl * zl - std::log(prior_hi / sd_hi) + 0.5 * zh * zh;
  };
  double lo = mean_lo, hi = mean_hi;
  if (!(diff(lo) > 0.0) || !(diff(hi) < 0.0))
    throw DomainError("threshold: weighted densities do not cross between the means");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (diff(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

DecisionScheme build_scheme(std::span<const GaussianPeak> peaks, std::span<const double> priors) {
  check_peaks(peaks);
  DecisionScheme s;
  s.priors = normalized(priors, peaks.size());
  if (all_equal(s.priors)) {
    s.thresholds = equal_prior_thresholds(peaks);
  } else {
    s.thresholds.resize(peaks.size() - 1);
    for (std::size_t i = 0; i + 1 < peaks.size(); ++i)
      s.thresholds[i] = weighted_threshold(peaks[i].mean, peaks[i].std_dev, s.priors[i],
                                           peaks[i + 1].mean, peaks[i + 1].std_dev, s.priors[i + 1]);
  }

  const std::size_t k = peaks.size();
  s.error_per_number.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (s.priors[i] == 0.0) {
      s.error_per_number[i] = 1.0;
      continue;
    }
    double e = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      e += s.priors[j] / s.priors[i] *
           gaussian_mass(region_lo(s, i), region_hi(s, i), peaks[j].mean, peaks[j].std_dev);
    }
    s.error_per_number[i] = std::min(e, 1.0);
  }
  return s;
}

DecisionScheme build_scheme(std::span<const GaussianPeak> peaks, PriorMode mode) {
  if (mode == PriorMode::Equal) return build_scheme(peaks, equal_priors(peaks.size()));
  std::vector<double> w(peaks.size());
  std::transform(peaks.begin(), peaks.end(), w.begin(), [](const auto& p) { return p.weight; });
  return build_scheme(peaks, w);
}

DecisionScheme build_scheme(const MixtureModel& model, PriorMode mode) {
  return build_scheme(model.peaks(), mode);
}

int classify(double area, const DecisionScheme& scheme) {
  const auto it = std::lower_bound(scheme.thresholds.begin(), scheme.thresholds.end(), area);
  return static_cast<int>(it - scheme.thresholds.begin());
}

double one_vs_many_error(std::span<const GaussianPeak> peaks, std::span<const double> priors) {
  check_peaks(peaks);
  if (peaks.size() < 3) throw InvalidInput("one_vs_many: need peaks for 0, 1 and 2 detections");
  const auto pr = normalized(priors, peaks.size());
  const auto t = equal_prior_thresholds(peaks);
  const double lo = t[0], hi = t[1];
  double mass = 0.0, err = 0.0;
  for (std::size_t j = 1; j < peaks.size(); ++j) {
    mass += pr[j];
    if (pr[j] == 0.0) continue;
    err += pr[j] * (j == 1 ? gaussian_mass(hi, kInf, peaks[j].mean, peaks[j].std_dev)
                           : gaussian_mass(lo, hi, peaks[j].mean, peaks[j].std_dev));
  }
  if (!(mass > 0.0)) throw InvalidInput("one_vs_many: priors of numbers >= 1 are all zero");
  return err / mass;
}

double one_vs_many_error(const MixtureModel& model, std::span<const double> priors) {
  return one_vs_many_error(model.peaks(), priors);
}

ConfusionMatrix confusion(std::span<const GaussianPeak> peaks, std::span<const double> priors) {
  const DecisionScheme s = build_scheme(peaks, priors);
  const std::size_t k = peaks.size();
  ConfusionMatrix c;
  c.priors = s.priors;
  c.matrix.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      row += c.matrix[i][j] =
          gaussian_mass(region_lo(s, j), region_hi(s, j), peaks[i].mean, peaks[i].std_dev);
    for (auto& v : c.matrix[i]) v /= row;
  }
  return c;
}

ConfusionMatrix confusion(const MixtureModel& model, std::span<const double> priors) {
  return confusion(model.peaks(), priors);
}

}  // namespace pnr
