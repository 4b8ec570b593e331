#include "pnr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pnr {

void SimConfig::validate() const {
  model.validate();
  if (n_pulses < 1) throw InvalidInput("n_pulses: must be >= 1");
  if (n_pulses > kMaxPulses)
    throw CapacityError("n_pulses: " + std::to_string(n_pulses) + " exceeds the storage budget of " +
                        std::to_string(kMaxPulses) + " pulses");
  if (bin_width && !(*bin_width > 0.0 && std::isfinite(*bin_width)))
    throw InvalidInput("bin_width: must be > 0 or \"auto\"");
}

double SimConfig::effective_bin_width() const {
  return bin_width.value_or(model.gain_per_photon / 12.0);
}

PulseRecord sample_pulse(const DetectorModel& model, CounterRng& rng) {
  PulseRecord rec;
  rec.true_incident = rng.poisson(model.mean_photon_number);

  int events = 0;
  for (int k = 0; k < rec.true_incident; ++k)
    if (rng.bernoulli(model.quantum_efficiency)) ++events;
  events += rng.poisson(model.dark_rate_per_gate);

  int detected = events;
  if (model.cell_count) {
    // a detection on an already fired cell is lost
    std::vector<std::uint64_t> dead;
    dead.reserve(static_cast<std::size_t>(events));
    detected = 0;
    const auto cells = *model.cell_count;
    for (int k = 0; k < events; ++k) {
      auto cell = static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(cells));
      if (cell >= cells) cell = cells - 1;
      if (std::find(dead.begin(), dead.end(), cell) != dead.end()) continue;
      dead.push_back(cell);
      ++detected;
    }
  }
  rec.true_detected = detected;

  const double gain_sd = std::sqrt(model.mult_noise_var);
  double area = model.area_offset;
  for (int k = 1; k <= detected; ++k)
    area += rng.normal(model.gain_per_photon - (2.0 * k - 1.0) * model.saturation_coeff, gain_sd);
  const double noise_var =
      model.electronic_noise_var + (detected > 0 ? model.extra_per_photon_var : 0.0);
  area += rng.normal(0.0, std::sqrt(noise_var));
  rec.area = area;
  return rec;
}

std::vector<PulseRecord> generate_pulses_serial(const DetectorModel& model, std::uint64_t n,
                                                std::uint64_t seed) {
  std::vector<PulseRecord> out(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    CounterRng rng(seed, i);
    out[i] = sample_pulse(model, rng);
  }
  return out;
}

std::vector<PulseRecord> generate_pulses_parallel(const DetectorModel& model, std::uint64_t n,
                                                  std::uint64_t seed, int threads) {
  std::vector<PulseRecord> out(n);
  const auto count = static_cast<std::int64_t>(n);
#ifdef _OPENMP
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
  for (std::int64_t i = 0; i < count; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    out[static_cast<std::size_t>(i)] = sample_pulse(model, rng);
  }
  (void)threads;
  return out;
}

namespace {

Histogram empty_histogram_for(double lo, double hi, double width) {
  auto n_bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
  n_bins = std::max<std::size_t>(n_bins, 1);
  // rounding in lo + n*width can leave hi just outside the last edge
  while (lo + static_cast<double>(n_bins) * width < hi) ++n_bins;
  return Histogram::uniform(lo, width, n_bins);
}

void require_binnable(std::span<const PulseRecord> pulses, double width) {
  if (pulses.empty()) throw InvalidInput("histogram: no pulses to bin");
  if (!(width > 0.0)) throw InvalidInput("bin_width: must be > 0");
}

}  // namespace

Histogram bin_pulses_serial(std::span<const PulseRecord> pulses, double bin_width) {
  require_binnable(pulses, bin_width);
  double lo = pulses.front().area, hi = lo;
  for (const auto& p : pulses) {
    lo = std::min(lo, p.area);
    hi = std::max(hi, p.area);
  }
  Histogram h = empty_histogram_for(lo, hi, bin_width);
  for (const auto& p : pulses) h.add(p.area);
  return h;
}

Histogram bin_pulses_parallel(std::span<const PulseRecord> pulses, double bin_width, int threads) {
  require_binnable(pulses, bin_width);
  const auto count = static_cast<std::int64_t>(pulses.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
#ifdef _OPENMP
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) reduction(min : lo) reduction(max : hi) num_threads(nt)
#endif
  for (std::int64_t i = 0; i < count; ++i) {
    lo = std::min(lo, pulses[static_cast<std::size_t>(i)].area);
    hi = std::max(hi, pulses[static_cast<std::size_t>(i)].area);
  }

  const Histogram layout = empty_histogram_for(lo, hi, bin_width);
  std::vector<std::uint64_t> counts(layout.bin_count(), 0);
  std::uint64_t under = 0, over = 0;
#ifdef _OPENMP
#pragma omp parallel num_threads(nt)
#endif
  {
    std::vector<std::uint64_t> local(counts.size(), 0);
    std::uint64_t lu = 0, lv = 0;
#ifdef _OPENMP
#pragma omp for schedule(static) nowait
#endif
    for (std::int64_t i = 0; i < count; ++i) {
      const double a = pulses[static_cast<std::size_t>(i)].area;
      if (auto b = layout.find_bin(a)) {
        ++local[*b];
      } else if (a < lo) {
        ++lu;
      } else {
        ++lv;
      }
    }
    // integer sums commute, so merge order does not affect the result
#ifdef _OPENMP
#pragma omp critical
#endif
    {
      for (std::size_t b = 0; b < counts.size(); ++b) counts[b] += local[b];
      under += lu;
      over += lv;
    }
  }
  (void)threads;
  std::vector<double> edges(layout.edges().begin(), layout.edges().end());
  return Histogram(std::move(edges), std::move(counts), under, over);
}

SimResult run(const SimConfig& config, int threads) {
  config.validate();
  SimResult r;
  r.pulses = generate_pulses_parallel(config.model, config.n_pulses, config.seed, threads);
  r.histogram = bin_pulses_parallel(r.pulses, config.effective_bin_width(), threads);
  return r;
}

SimResult run_serial(const SimConfig& config) {
  config.validate();
  SimResult r;
  r.pulses = generate_pulses_serial(config.model, config.n_pulses, config.seed);
  r.histogram = bin_pulses_serial(r.pulses, config.effective_bin_width());
  return r;
}

}  // namespace pnr
