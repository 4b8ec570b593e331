// Test-only reference computations. Nothing here calls into the library's
// numerical code: densities are integrated by quadrature, crossings found by
// bisection, and distributions evaluated from their closed forms.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "pnr/core.hpp"

namespace oracle {

inline double normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (b <= a) return 0.0;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Mass of N(mean, sd) on [lo, hi] by quadrature; infinite ends are cut at
/// 40 standard deviations.
inline double normal_mass(double lo, double hi, double mean, double sd) {
  lo = std::max(lo, mean - 40.0 * sd);
  hi = std::min(hi, mean + 40.0 * sd);
  if (hi <= lo) return 0.0;
  // split at the mean so the peak always sits on a panel boundary
  auto f = [&](double x) { return normal_pdf(x, mean, sd); };
  if (lo < mean && mean < hi) return simpson(f, lo, mean) + simpson(f, mean, hi);
  return simpson(f, lo, hi);
}

/// Normal CDF by quadrature from mean - 40 sd.
inline double normal_cdf(double x, double mean, double sd) {
  if (x <= mean) return 0.5 - normal_mass(x, mean, mean, sd);
  return 0.5 + normal_mass(mean, x, mean, sd);
}

/// Root of f on [a, b] by bisection; f(a) and f(b) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a);
  for (int i = 0; i < 300; ++i) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double fm = f(m);
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

/// Crossing of two unit-area normal densities between their means, in log
/// space so far tails do not underflow.
inline double density_crossing(double m1, double s1, double m2, double s2) {
  auto g = [&](double x) {
    const double z1 = (x - m1) / s1, z2 = (x - m2) / s2;
    return (-std::log(s1) - 0.5 * z1 * z1) - (-std::log(s2) - 0.5 * z2 * z2);
  };
  return bisect(g, m1, m2);
}

inline double poisson_pmf(int k, double mu) {
  return std::exp(k * std::log(mu) - mu - std::lgamma(k + 1.0));
}

/// Table I of the reference measurement: photon number, mean area, std dev.
inline std::vector<pnr::GaussianPeak> table1_peaks() {
  const double means[] = {0, 135, 275, 416, 561, 709, 859};
  const double sds[] = {10.6, 24.8, 31.7, 35.3, 39.0, 42.2, 44.5};
  std::vector<pnr::GaussianPeak> p;
  for (int i = 0; i < 7; ++i) p.push_back({i, means[i], sds[i], 1.0 / 7.0});
  return p;
}

/// Published %Error column of Table I, in percent.
inline std::vector<double> table1_percent_error() { return {0.01, 1.1, 3.4, 6.1, 8.5, 10.6, 11.3}; }

/// Equal-prior error of every number: mass of all other peaks inside each
/// region, regions bounded by quadrature-independent bisection crossings.
inline std::vector<double> equal_prior_errors(const std::vector<pnr::GaussianPeak>& peaks) {
  const std::size_t k = peaks.size();
  std::vector<double> t;
  for (std::size_t i = 0; i + 1 < k; ++i)
    t.push_back(density_crossing(peaks[i].mean, peaks[i].std_dev, peaks[i + 1].mean, peaks[i + 1].std_dev));
  std::vector<double> e(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const double lo = i == 0 ? -INFINITY : t[i - 1];
    const double hi = i + 1 == k ? INFINITY : t[i];
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) e[i] += normal_mass(lo, hi, peaks[j].mean, peaks[j].std_dev);
  }
  return e;
}

/// Least squares line by the textbook normal equations.
struct Line {
  double slope, intercept;
};
inline Line normal_equations(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

/// Prominent maxima counted with prefix sums and run-length plateaus: a run
/// of equal smoothed values counts once when both neighbouring runs are lower
/// and it clears 2% of the peak value.
inline std::size_t count_prominent_maxima(std::span<const std::uint64_t> counts) {
  const std::size_t n = counts.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t b = 0; b < n; ++b) prefix[b + 1] = prefix[b] + static_cast<double>(counts[b]);
  std::vector<double> s(n);
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t lo = b < 2 ? 0 : b - 2, hi = std::min(n, b + 3);
    s[b] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  std::vector<std::pair<double, std::size_t>> runs;
  for (double v : s)
    if (runs.empty() || runs.back().first != v) runs.push_back({v, 1});
  const double top = *std::max_element(s.begin(), s.end());
  std::size_t found = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const bool left = r == 0 || runs[r - 1].first < runs[r].first;
    const bool right = r + 1 == runs.size() || runs[r + 1].first < runs[r].first;
    found += left && right && runs[r].first > 0.02 * top;
  }
  return found;
}

}  // namespace oracle
