#include "pnr/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace pnr {

void FitConfig::validate() const {
  if (n_peaks && *n_peaks < 2) throw InvalidInput("n_peaks: must be >= 2 or \"auto\"");
  if (max_iterations < 1) throw InvalidInput("max_iterations: must be >= 1");
  if (!(tolerance > 0.0)) throw InvalidInput("tolerance: must be > 0");
  if (init && init->size() < 2) throw InvalidInput("init: needs at least two peaks");
  if (init && n_peaks && static_cast<std::size_t>(*n_peaks) != init->size())
    throw InvalidInput("n_peaks: disagrees with the explicit initial model");
  if (cutoff == CutoffMode::Fixed && !std::isfinite(cutoff_area))
    throw InvalidInput("upper_cutoff: must be finite");
}

// ----------------------------------------------------------------------------
// Initial guess
// ----------------------------------------------------------------------------

namespace {

std::vector<double> smoothed_counts(const Histogram& hist) {
  const auto c = hist.counts();
  const std::size_t n = c.size();
  std::vector<double> s(n);
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t lo = b >= 2 ? b - 2 : 0;
    const std::size_t hi = std::min(n - 1, b + 2);
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) sum += static_cast<double>(c[k]);
    s[b] = sum / static_cast<double>(hi - lo + 1);
  }
  return s;
}

}  // namespace

std::vector<double> prominent_maxima(const Histogram& hist) {
  const auto s = smoothed_counts(hist);
  const std::size_t n = s.size();
  const double floor = 0.02 * *std::max_element(s.begin(), s.end());
  std::vector<double> out;
  std::size_t b = 0;
  while (b < n) {
    std::size_t e = b + 1;
    while (e < n && s[e] == s[b]) ++e;
    const bool above_left = b == 0 || s[b - 1] < s[b];
    const bool above_right = e == n || s[e] < s[b];
    if (above_left && above_right && s[b] > floor && n > 1)
      out.push_back(0.5 * (hist.bin_center(b) + hist.bin_center(e - 1)));
    b = e;
  }
  return out;
}

MixtureModel init_guess(const Histogram& hist, std::optional<int> n_peaks) {
  if (hist.in_range() == 0) throw InvalidInput("init_guess: histogram is empty");
  if (n_peaks && *n_peaks < 2) throw InvalidInput("n_peaks: must be >= 2");
  const auto maxima = prominent_maxima(hist);
  if (maxima.size() < 2)
    throw InvalidInput("init_guess: found " + std::to_string(maxima.size()) +
                       " prominent maxima, need at least 2; supply an explicit initial model");

  std::vector<double> gaps(maxima.size() - 1);
  for (std::size_t i = 0; i + 1 < maxima.size(); ++i) gaps[i] = maxima[i + 1] - maxima[i];
  std::sort(gaps.begin(), gaps.end());
  const std::size_t m = gaps.size();
  const double spacing = m % 2 ? gaps[m / 2] : 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]);
  const double x0 = maxima.front();
  const int k = n_peaks.value_or(static_cast<int>(maxima.size()) + 2);

  std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
  for (std::size_t b = 0; b < hist.bin_count(); ++b) {
    const double rel = (hist.bin_center(b) - x0) / spacing;
    const long idx = std::clamp(std::lround(rel), 0L, static_cast<long>(k - 1));
    mass[static_cast<std::size_t>(idx)] += static_cast<double>(hist.counts()[b]);
  }
  // keep every weight strictly positive so its logit stays finite
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (auto& w : mass) w = std::max(w / total, 1e-4);
  const double renorm = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (auto& w : mass) w /= renorm;

  std::vector<double> widths(mass.size(), spacing / 4.0);
  return MixtureModel::free(x0, spacing, 0.0, std::move(widths), std::move(mass));
}

// ----------------------------------------------------------------------------
// Model evaluation
// ----------------------------------------------------------------------------

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double std_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// Per-bin probability of one component and its derivative with respect to
/// the component mean.
void component_mass(std::span<const double> edges, double mean, double sd, std::span<double> mass,
                    std::span<double> dmean) {
  const std::size_t ne = edges.size();
  std::vector<double> z(ne), lower(ne), upper(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    z[e] = (edges[e] - mean) / sd;
    lower[e] = 0.5 * std::erfc(-z[e] / std::numbers::sqrt2);
    upper[e] = 0.5 * std::erfc(z[e] / std::numbers::sqrt2);
  }
  for (std::size_t b = 0; b + 1 < ne; ++b) {
    mass[b] = z[b] >= 0.0 ? upper[b] - upper[b + 1] : lower[b + 1] - lower[b];
    if (!dmean.empty()) dmean[b] = (std_pdf(z[b]) - std_pdf(z[b + 1])) / sd;
  }
}

double total_of(const Histogram& hist) { return static_cast<double>(hist.total_pulses()); }

/// Number of leading bins whose centres lie below upper.
std::size_t window_bins(const Histogram& hist, double upper) {
  std::size_t n = 0;
  while (n < hist.bin_count() && hist.bin_center(n) < upper) ++n;
  return n;
}

double window_count(const Histogram& hist, std::size_t nb) {
  double c = 0.0;
  for (std::size_t b = 0; b < nb; ++b) c += static_cast<double>(hist.counts()[b]);
  return c;
}

/// Unconstrained coordinates of one constraint regime.
struct Layout {
  ConstraintKind kind;
  int k = 0;
  bool fit_sat = true;
  double fixed_sat = 0.0;
  int n = 0;
  int sat = -1;    // index of sat, if free
  int width = 0;   // first width coordinate (log sd or log variance)
  int n_width = 0;
  int weight = 0;  // first weight coordinate (logits or log mu)
  int n_weight = 0;

  Layout(ConstraintKind kind_, int k_, bool fit_sat_, double fixed_sat_)
      : kind(kind_), k(k_), fit_sat(fit_sat_), fixed_sat(fixed_sat_) {
    n = 2;
    if (fit_sat) sat = n++;
    width = n;
    n_width = kind == ConstraintKind::LinearVariance ? 3 : k;
    n += n_width;
    weight = n;
    n_weight = kind == ConstraintKind::PoissonWeights ? 1 : k - 1;
    n += n_weight;
  }
};

struct Decoded {
  double x0 = 0.0, spacing = 0.0, sat = 0.0;
  std::vector<double> sd, w;
  double mu = 0.0;
  VarianceLaw law;
  bool ok = true;
};

Decoded decode(const Layout& L, const VectorXd& p) {
  Decoded d;
  d.x0 = p[0];
  d.spacing = p[1];
  d.sat = L.fit_sat ? p[L.sat] : L.fixed_sat;
  d.sd.resize(static_cast<std::size_t>(L.k));
  if (L.kind == ConstraintKind::LinearVariance) {
    d.law = {std::exp(p[L.width]), std::exp(p[L.width + 1]), std::exp(p[L.width + 2])};
    for (int i = 0; i < L.k; ++i) d.sd[static_cast<std::size_t>(i)] = std::sqrt(d.law.variance(i));
  } else {
    for (int i = 0; i < L.k; ++i) d.sd[static_cast<std::size_t>(i)] = std::exp(p[L.width + i]);
  }
  if (L.kind == ConstraintKind::PoissonWeights) {
    d.mu = std::exp(p[L.weight]);
    if (!std::isfinite(d.mu)) {
      d.ok = false;
      return d;
    }
    d.w = MixtureModel::truncated_poisson(d.mu, static_cast<std::size_t>(L.k));
  } else {
    d.w.resize(static_cast<std::size_t>(L.k));
    double top = 0.0;
    for (int i = 1; i < L.k; ++i) top = std::max(top, p[L.weight + i - 1]);
    double sum = 0.0;
    for (int i = 0; i < L.k; ++i) {
      const double z = i == 0 ? 0.0 : p[L.weight + i - 1];
      sum += (d.w[static_cast<std::size_t>(i)] = std::exp(z - top));
    }
    for (auto& v : d.w) v /= sum;
  }
  for (int i = 0; i < L.k; ++i) {
    const double s = d.sd[static_cast<std::size_t>(i)];
    if (!(s > 0.0) || !std::isfinite(s)) d.ok = false;
  }
  for (int j = 0; j < L.n; ++j)
    if (!std::isfinite(p[j])) d.ok = false;
  return d;
}

MixtureModel to_model(const Layout& L, const Decoded& d) {
  switch (L.kind) {
    case ConstraintKind::PoissonWeights:
      return MixtureModel::poisson(d.x0, d.spacing, d.sat, d.sd, d.mu);
    case ConstraintKind::LinearVariance:
      return MixtureModel::linear_variance(d.x0, d.spacing, d.sat, d.law, d.w);
    case ConstraintKind::FreeWeightsFreeSigmas: break;
  }
  return MixtureModel::free(d.x0, d.spacing, d.sat, d.sd, d.w);
}

VectorXd encode(const Layout& L, const MixtureModel& m) {
  VectorXd p(L.n);
  p[0] = m.x0();
  p[1] = m.spacing();
  if (L.fit_sat) p[L.sat] = m.sat();
  const auto sd = m.std_devs();
  if (L.kind == ConstraintKind::LinearVariance) {
    VarianceLaw law;
    if (auto given = m.variance_law()) {
      law = *given;
    } else {
      const double quarter = 0.25 * sd[0] * sd[0];
      law = {quarter, quarter, quarter};
    }
    const double floor = 1e-10 * m.spacing() * m.spacing();
    p[L.width] = std::log(std::max(law.electronic_var, floor));
    p[L.width + 1] = std::log(std::max(law.extra_var, floor));
    p[L.width + 2] = std::log(std::max(law.mult_var, floor));
  } else {
    for (int i = 0; i < L.k; ++i) p[L.width + i] = std::log(sd[static_cast<std::size_t>(i)]);
  }
  const auto w = m.weights();
  if (L.kind == ConstraintKind::PoissonWeights) {
    double mu = 0.0;
    if (auto given = m.poisson_mu()) {
      mu = *given;
    } else {
      for (int i = 0; i < L.k; ++i) mu += i * w[static_cast<std::size_t>(i)];
    }
    p[L.weight] = std::log(std::max(mu, 1e-3));
  } else {
    const double w0 = std::max(w[0], 1e-12);
    for (int i = 1; i < L.k; ++i)
      p[L.weight + i - 1] = std::log(std::max(w[static_cast<std::size_t>(i)], 1e-12) / w0);
  }
  return p;
}

/// Residuals and cached per-component quantities at one parameter point.
class Problem {
 public:
  /// Fits the first nb bins plus the underflow, and the overflow when nb
  /// covers the whole histogram. The tails keep probability that leaves the
  /// binned range from going unpenalized. With nb short of the full range the
  /// model is conditioned on the window.
  Problem(const Histogram& hist, Layout layout, std::size_t nb)
      : L_(std::move(layout)), windowed_(nb < hist.bin_count()) {
    const auto e = hist.edges();
    edges_.push_back(-std::numeric_limits<double>::infinity());
    edges_.insert(edges_.end(), e.begin(), e.begin() + static_cast<std::ptrdiff_t>(nb + 1));
    std::vector<double> c{static_cast<double>(hist.underflow())};
    for (std::size_t b = 0; b < nb; ++b) c.push_back(static_cast<double>(hist.counts()[b]));
    if (!windowed_) {
      edges_.push_back(std::numeric_limits<double>::infinity());
      c.push_back(static_cast<double>(hist.overflow()));
    }
    nb_ = static_cast<int>(c.size());
    counts_ = Eigen::Map<const VectorXd>(c.data(), nb_);
    total_ = counts_.sum();
    scale_ = counts_.cwiseMax(1.0).cwiseSqrt().cwiseInverse();
  }

  const Layout& layout() const { return L_; }
  int bins() const { return nb_; }

  /// Expected counts; false if the parameters are outside the model domain.
  bool model_counts(const VectorXd& p, VectorXd& m, MatrixXd* mass = nullptr,
                    MatrixXd* dmean = nullptr, Decoded* out = nullptr,
                    double* norm = nullptr) const {
    Decoded d = decode(L_, p);
    if (!d.ok) return false;
    m.setZero(nb_);
    std::vector<double> ms(static_cast<std::size_t>(nb_)), dm(static_cast<std::size_t>(nb_));
    for (int i = 0; i < L_.k; ++i) {
      const double mean = d.x0 + i * d.spacing - double(i) * i * d.sat;
      component_mass(edges_, mean, d.sd[static_cast<std::size_t>(i)], ms,
                     dmean ? std::span<double>(dm) : std::span<double>());
      const double wi = d.w[static_cast<std::size_t>(i)];
      for (int b = 0; b < nb_; ++b) {
        m[b] += total_ * wi * ms[static_cast<std::size_t>(b)];
        if (mass) (*mass)(i, b) = ms[static_cast<std::size_t>(b)];
        if (dmean) (*dmean)(i, b) = dm[static_cast<std::size_t>(b)];
      }
    }
    // window mass of the mixture
    const double s = windowed_ ? m.sum() / total_ : 1.0;
    if (!(s > 0.0)) return false;
    m /= s;
    if (norm) *norm = s;
    if (!m.allFinite()) return false;
    if (out) *out = std::move(d);
    return true;
  }

  double objective(const VectorXd& p) const {
    VectorXd m;
    if (!model_counts(p, m)) return std::numeric_limits<double>::infinity();
    return residual_of(m).squaredNorm();
  }

  VectorXd residual_of(const VectorXd& m) const {
    return scale_.cwiseProduct(counts_ - m);
  }

  /// Jacobian of the residual vector: analytic for the ladder and weight
  /// coordinates, central differences for the width coordinates.
  MatrixXd jacobian(const VectorXd& p) const {
    VectorXd m;
    MatrixXd mass(L_.k, nb_), dmean(L_.k, nb_);
    Decoded d;
    double norm = 1.0;
    model_counts(p, m, &mass, &dmean, &d, &norm);

    MatrixXd dm = MatrixXd::Zero(nb_, L_.n);
    for (int i = 0; i < L_.k; ++i) {
      const double wi = total_ * d.w[static_cast<std::size_t>(i)];
      for (int b = 0; b < nb_; ++b) {
        const double g = wi * dmean(i, b);
        dm(b, 0) += g;
        dm(b, 1) += g * i;
        if (L_.fit_sat) dm(b, L_.sat) -= g * double(i) * i;
      }
    }

    if (L_.kind == ConstraintKind::PoissonWeights) {
      double mean_index = 0.0;
      for (int i = 0; i < L_.k; ++i) mean_index += i * d.w[static_cast<std::size_t>(i)];
      for (int i = 0; i < L_.k; ++i) {
        const double c = total_ * d.w[static_cast<std::size_t>(i)] * (i - mean_index);
        for (int b = 0; b < nb_; ++b) dm(b, L_.weight) += c * mass(i, b);
      }
    } else {
      // d w_i / d z_k = w_i (delta_ik - w_k)
      VectorXd mixed = VectorXd::Zero(nb_);
      for (int i = 0; i < L_.k; ++i) mixed += d.w[static_cast<std::size_t>(i)] * mass.row(i).transpose();
      for (int k = 1; k < L_.k; ++k) {
        const double wk = total_ * d.w[static_cast<std::size_t>(k)];
        for (int b = 0; b < nb_; ++b) dm(b, L_.weight + k - 1) = wk * (mass(k, b) - mixed[b]);
      }
    }

    if (windowed_) {
      // chain rule through the window normalization m = U / S
      for (int j = 0; j < L_.n; ++j) {
        const double ds = dm.col(j).sum() / total_;
        dm.col(j) = (dm.col(j) - m * ds) / norm;
      }
    }

    constexpr double h = 1e-4;
    VectorXd plus, minus;
    for (int j = L_.width; j < L_.width + L_.n_width; ++j) {
      VectorXd q = p;
      q[j] = p[j] + h;
      const bool ok_plus = model_counts(q, plus);
      q[j] = p[j] - h;
      const bool ok_minus = model_counts(q, minus);
      if (ok_plus && ok_minus) dm.col(j) = (plus - minus) / (2.0 * h);
    }

    MatrixXd J(nb_, L_.n);
    for (int b = 0; b < nb_; ++b) J.row(b) = -scale_[b] * dm.row(b);
    return J;
  }

 private:
  Layout L_;
  bool windowed_;
  int nb_ = 0;
  double total_ = 0.0;
  VectorXd scale_;
  VectorXd counts_;
  std::vector<double> edges_;
};

int free_parameter_count(const Layout& L) { return L.n; }

void rank_warnings(const Problem& problem, const VectorXd& p, const MixtureModel& model,
                   std::vector<std::string>& warnings) {
  const MatrixXd J = problem.jacobian(p);
  MatrixXd A = J.transpose() * J;
  const Eigen::Index n = A.rows();
  VectorXd d(n);
  bool zero_column = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    d[j] = A(j, j) > 0.0 ? 1.0 / std::sqrt(A(j, j)) : 0.0;
    if (!(A(j, j) > 0.0)) zero_column = true;
  }
  const MatrixXd C = d.asDiagonal() * A * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(C);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (zero_column || !(hi > 0.0) || lo < 1e-12 * hi)
    warnings.push_back("rank deficiency: some parameters are not determined by the data; "
                       "n_peaks may exceed the resolvable structure");
  const auto w = model.weights();
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] < 1e-4)
      warnings.push_back("peak " + std::to_string(i) + " carries negligible weight (" +
                         std::to_string(w[i]) + "); n_peaks may exceed the resolvable structure");
}

}  // namespace

namespace {

/// Mixture probability below the first edge and above the last one.
std::pair<double, double> tail_mass(const Histogram& hist, const MixtureModel& model) {
  const auto e = hist.edges();
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const double mean = model.mean(static_cast<int>(i)), sd = model.std_devs()[i];
    const double w = model.weights()[i];
    lo += w * 0.5 * std::erfc(-(e.front() - mean) / sd / std::numbers::sqrt2);
    hi += w * 0.5 * std::erfc((e.back() - mean) / sd / std::numbers::sqrt2);
  }
  return {lo, hi};
}

/// Per-bin probabilities of the mixture (or one peak of it).
std::vector<double> bin_probabilities(const Histogram& hist, const MixtureModel& model,
                                      int peak = -1) {
  std::vector<double> out(hist.bin_count(), 0.0), mass(hist.bin_count());
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (peak >= 0 && static_cast<std::size_t>(peak) != i) continue;
    component_mass(hist.edges(), model.mean(static_cast<int>(i)), model.std_devs()[i], mass, {});
    const double w = model.weights()[i];
    for (std::size_t b = 0; b < out.size(); ++b) out[b] += w * mass[b];
  }
  return out;
}

/// Counts per unit probability: the pulse total, or the in-window count over
/// the in-window probability when the window stops short of the last bin.
double count_scale(const Histogram& hist, const MixtureModel& model, std::size_t nw) {
  if (nw >= hist.bin_count()) return total_of(hist);
  const auto p = bin_probabilities(hist, model);
  const double mass = std::accumulate(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(nw),
                                      tail_mass(hist, model).first);
  const double count = window_count(hist, nw) + static_cast<double>(hist.underflow());
  return mass > 0.0 ? count / mass : 0.0;
}

}  // namespace

std::vector<double> expected_counts(const Histogram& hist, const MixtureModel& model, int peak,
                                    double upper) {
  const double scale = count_scale(hist, model, window_bins(hist, upper));
  auto out = bin_probabilities(hist, model, peak);
  for (auto& v : out) v *= scale;
  return out;
}

double fit_objective(const Histogram& hist, const MixtureModel& model, double upper) {
  const std::size_t nw = window_bins(hist, upper);
  const double scale = count_scale(hist, model, nw);
  const auto p = bin_probabilities(hist, model);
  auto term = [](double c, double e) { return (c - e) * (c - e) / std::max(c, 1.0); };
  double f = 0.0;
  for (std::size_t b = 0; b < nw; ++b) f += term(static_cast<double>(hist.counts()[b]), scale * p[b]);
  const auto [lo, hi] = tail_mass(hist, model);
  f += term(static_cast<double>(hist.underflow()), scale * lo);
  if (nw == hist.bin_count()) f += term(static_cast<double>(hist.overflow()), scale * hi);
  return f;
}

// ----------------------------------------------------------------------------
// Damped least squares
// ----------------------------------------------------------------------------

namespace {

FitReport damped_least_squares(const Histogram& hist, ConstraintKind kind,
                               const MixtureModel& start, std::size_t nw, double upper,
                               int max_iterations, double tolerance) {
  const int k = static_cast<int>(start.size());
  // with two peaks the curvature term is indistinguishable from the spacing
  const bool fit_sat = k >= 3;
  Problem problem(hist, Layout(kind, k, fit_sat, fit_sat ? 0.0 : start.sat()), nw);
  const Layout& L = problem.layout();

  FitReport report{start, 0.0, 0, false, 0.0, {}, {}, {}, upper};
  std::size_t nonempty = 0;
  for (std::size_t b = 0; b < nw; ++b) nonempty += hist.counts()[b] > 0;
  if (nonempty < static_cast<std::size_t>(4 * free_parameter_count(L)))
    report.warnings.push_back("underdetermined: " + std::to_string(nonempty) +
                              " nonempty bins for " + std::to_string(free_parameter_count(L)) +
                              " free parameters (want at least 4 per parameter)");

  VectorXd p = encode(L, start);
  double f = problem.objective(p);
  if (!std::isfinite(f)) throw InvalidInput("fit: initial model is outside the model domain");
  report.objective_trace.push_back(f);

  const double exact_fit =
      std::numeric_limits<double>::epsilon() * static_cast<double>(hist.total_pulses());
  double lambda = 1e-3;
  while (report.iterations < max_iterations && !report.converged) {
    ++report.iterations;
    if (f <= exact_fit) {
      // residuals are at rounding level: nothing left to decrease
      report.last_relative_decrease = 0.0;
      report.converged = true;
      break;
    }
    VectorXd m;
    problem.model_counts(p, m);
    const VectorXd r = problem.residual_of(m);
    const MatrixXd J = problem.jacobian(p);
    const MatrixXd A = J.transpose() * J;
    const VectorXd g = J.transpose() * r;
    const double diag_floor = 1e-12 * std::max(A.diagonal().maxCoeff(), 1e-300);

    bool accepted = false;
    while (!accepted) {
      MatrixXd damped = A;
      for (int j = 0; j < L.n; ++j) damped(j, j) += lambda * std::max(A(j, j), diag_floor);
      const VectorXd step = damped.ldlt().solve(-g);
      const VectorXd trial = p + step;
      const double ft = step.allFinite() ? problem.objective(trial) : f;
      if (ft < f) {
        report.last_relative_decrease = (f - ft) / f;
        p = trial;
        f = ft;
        report.objective_trace.push_back(f);
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) break;
      }
    }
    if (!accepted) {
      // no damping level reduces the objective: numerically stationary
      report.last_relative_decrease = 0.0;
      report.converged = true;
      break;
    }
    if (report.last_relative_decrease < tolerance) report.converged = true;
  }

  VectorXd m;
  Decoded d;
  problem.model_counts(p, m, nullptr, nullptr, &d);
  report.model = to_model(L, d);
  report.objective = f;
  report.per_peak = report.model.peaks();
  rank_warnings(problem, p, report.model, report.warnings);
  if (!report.converged)
    report.warnings.push_back("did not converge within " + std::to_string(max_iterations) +
                              " iterations");
  return report;
}

/// Standard deviation of the counts within half a spacing of x0, floored at a
/// tenth of the local bin width.
double first_peak_width(const Histogram& hist, const MixtureModel& start) {
  const double x0 = start.x0(), half = 0.5 * start.spacing();
  double n = 0.0, sum = 0.0, sq = 0.0, width = 0.0;
  for (std::size_t b = 0; b < hist.bin_count(); ++b) {
    const double x = hist.bin_center(b);
    if (std::abs(x - x0) > half) continue;
    const double c = static_cast<double>(hist.counts()[b]);
    n += c;
    sum += c * x;
    sq += c * x * x;
    width = std::max(width, hist.edges()[b + 1] - hist.edges()[b]);
  }
  const double var = n > 0.0 ? std::max(sq / n - (sum / n) * (sum / n), 0.0) : 0.0;
  return std::max(std::sqrt(var), 0.1 * width);
}

}  // namespace

FitReport fit_spectrum(const Histogram& hist, const FitConfig& config) {
  config.validate();
  if (hist.in_range() == 0) throw InvalidInput("fit: histogram is empty");

  MixtureModel start = config.init ? *config.init : init_guess(hist, config.n_peaks);
  const int k = static_cast<int>(start.size());

  double upper = std::numeric_limits<double>::infinity();
  if (config.cutoff == CutoffMode::Auto) upper = start.mean(k - 1) + 0.25 * start.spacing();
  if (config.cutoff == CutoffMode::Fixed) upper = config.cutoff_area;
  const std::size_t nw = window_bins(hist, upper);
  if (nw == hist.bin_count()) upper = std::numeric_limits<double>::infinity();
  if (window_count(hist, nw) == 0.0)
    throw InvalidInput("upper_cutoff: no counts below " + std::to_string(upper));

  auto fit_from = [&](MixtureModel from) {
    if (!config.init && config.constraint != ConstraintKind::LinearVariance) {
      // Widths tied by the variance law cannot collapse one at a time, so a
      // short constrained fit gives the free regimes a safer starting point.
      const FitReport pre = damped_least_squares(hist, ConstraintKind::LinearVariance, from, nw,
                                                 upper, config.max_iterations, 1e-6);
      const auto sd = pre.model.std_devs();
      const auto w = pre.model.weights();
      const double ratio = pre.model.spacing() / from.spacing();
      if (pre.converged && ratio > 0.8 && ratio < 1.25)
        from = MixtureModel::free(pre.model.x0(), pre.model.spacing(), pre.model.sat(),
                                  {sd.begin(), sd.end()}, {w.begin(), w.end()});
    }
    return damped_least_squares(hist, config.constraint, from, nw, upper, config.max_iterations,
                                config.tolerance);
  };
  FitReport best = fit_from(start);
  if (!config.init) {
    // Empty bins weigh as much as a one-count bin, so narrowing a peak that
    // starts too wide has to climb first. A second start at the measured
    // width of the first peak covers that case; the lower objective wins.
    const double narrow = first_peak_width(hist, start);
    if (narrow < start.std_devs()[0]) {
      const auto w = start.weights();
      FitReport alt = fit_from(MixtureModel::free(start.x0(), start.spacing(), start.sat(),
                                                  std::vector<double>(start.size(), narrow),
                                                  {w.begin(), w.end()}));
      if (alt.objective < best.objective) best = std::move(alt);
    }
  }
  return best;
}

}  // namespace pnr
