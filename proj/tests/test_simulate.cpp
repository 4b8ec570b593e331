#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pnr/simulate.hpp"

using namespace pnr;

namespace {

struct Moments {
  std::size_t n = 0;
  double mean = 0.0, var = 0.0;
};

std::map<int, Moments> by_detected(const std::vector<PulseRecord>& pulses) {
  std::map<int, std::vector<double>> groups;
  for (const auto& p : pulses) groups[p.true_detected].push_back(p.area);
  std::map<int, Moments> out;
  for (auto& [d, v] : groups) {
    Moments m;
    m.n = v.size();
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / m.n;
    for (double a : v) m.var += (a - m.mean) * (a - m.mean);
    m.var /= std::max<std::size_t>(m.n - 1, 1);
    out[d] = m;
  }
  return out;
}

/// Upper 1e-3 quantile of chi-square by the Wilson-Hilferty approximation.
double chi2_critical_1e3(int df) {
  const double z = 3.090232306;
  const double k = df;
  return k * std::pow(1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k)), 3.0);
}

}  // namespace

TEST_CASE("sample_pulse: zero-photon peak sits at the offset") {
  DetectorModel m;
  m.mean_photon_number = 0.0;
  m.electronic_noise_var = 25.0;
  m.area_offset = 450.0;
  const auto pulses = generate_pulses_serial(m, 20000, 1);
  double mean = 0.0;
  for (const auto& p : pulses) {
    CHECK(p.true_detected == 0);
    mean += p.area;
  }
  mean /= pulses.size();
  CHECK(std::abs(mean - 450.0) < 4.0 * 5.0 / std::sqrt(20000.0));
}

TEST_CASE("sample_pulse: noise-free multiplication gives a lattice") {
  DetectorModel m;
  m.mean_photon_number = 4.0;
  m.quantum_efficiency = 1.0;
  m.gain_per_photon = 100.0;
  m.area_offset = 7.0;
  for (const auto& p : generate_pulses_serial(m, 5000, 2)) {
    CHECK(p.true_detected == p.true_incident);
    CHECK(p.area == 7.0 + 100.0 * p.true_detected);
  }
}

TEST_CASE("sample_pulse: Table I subpopulations") {
  // spacing and curvature from a ladder fit of the Table I means
  const DetectorModel m = fixtures::table1_detector(0.0, -1.5);
  auto mm = m;
  mm.gain_per_photon = 134.5;
  const auto groups = by_detected(generate_pulses_serial(mm, 100000, 3));
  const auto& two = groups.at(2);
  const double sd = std::sqrt(mm.area_variance(2));
  CHECK(mm.mean_area(2) == doctest::Approx(275.0));
  CHECK(std::abs(two.mean - 275.0) < 4.0 * sd / std::sqrt(double(two.n)));
  CHECK(std::abs(std::sqrt(two.var) - 31.7) < 2.0);
}

TEST_CASE("sample_pulse: variance law and mean ladder per subpopulation") {
  DetectorModel m = fixtures::table1_detector(450.0, 2.0);
  const auto groups = by_detected(generate_pulses_serial(m, 200000, 4));
  int checked = 0;
  for (const auto& [d, g] : groups) {
    if (g.n < 500) continue;
    ++checked;
    const double var = m.area_variance(d);
    const double var_se = var * std::sqrt(2.0 / (g.n - 1));
    CHECK(std::abs(g.var - var) < 5.0 * var_se);
    CHECK(std::abs(g.mean - m.mean_area(d)) < 5.0 * std::sqrt(var / g.n));
  }
  CHECK(checked >= 6);
}

TEST_CASE("run: detected counts follow the thinned Poisson law") {
  DetectorModel m;
  m.mean_photon_number = 4.0;
  m.quantum_efficiency = 0.85;
  m.gain_per_photon = 100.0;
  m.electronic_noise_var = 1.0;
  const std::size_t n = 100000;
  const auto pulses = generate_pulses_parallel(m, n, 77);
  std::map<int, double> freq;
  for (const auto& p : pulses) freq[p.true_detected] += 1.0;

  const double mu = 3.4;
  double tv = 0.0;
  for (int k = 0; k < 40; ++k) tv += std::abs(freq[k] / n - oracle::poisson_pmf(k, mu));
  CHECK(0.5 * tv < 0.01);

  // chi-square with the tail pooled so every cell expects >= 5 counts
  double chi2 = 0.0, tail_obs = n, tail_exp = n;
  int df = 0;
  for (int k = 0;; ++k) {
    const double e = n * oracle::poisson_pmf(k, mu);
    if (tail_exp - e < 5.0) break;
    chi2 += (freq[k] - e) * (freq[k] - e) / e;
    tail_obs -= freq[k];
    tail_exp -= e;
    ++df;
  }
  chi2 += (tail_obs - tail_exp) * (tail_obs - tail_exp) / tail_exp;
  CHECK(chi2 < chi2_critical_1e3(df));
}

TEST_CASE("run: dark detections add to the thinned mean") {
  DetectorModel m;
  m.mean_photon_number = 2.0;
  m.quantum_efficiency = 0.5;
  m.dark_rate_per_gate = 0.3;
  m.gain_per_photon = 10.0;
  const auto pulses = generate_pulses_serial(m, 100000, 8);
  double mean = 0.0;
  for (const auto& p : pulses) mean += p.true_detected;
  mean /= pulses.size();
  CHECK(std::abs(mean - 1.3) < 4.0 * std::sqrt(1.3 / 100000.0));
}

TEST_CASE("run: finite cells saturate the detected count") {
  DetectorModel m;
  m.mean_photon_number = 50.0;
  m.quantum_efficiency = 1.0;
  m.gain_per_photon = 10.0;
  m.cell_count = 10;
  double mean10 = 0.0;
  for (const auto& p : generate_pulses_serial(m, 20000, 9)) {
    CHECK(p.true_detected <= 10);
    mean10 += p.true_detected;
  }
  CHECK(mean10 / 20000 < 10.0);

  // mean detected count is non-increasing as cells get scarcer
  m.mean_photon_number = 6.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::optional<std::uint64_t> cells :
       {std::optional<std::uint64_t>{}, std::optional<std::uint64_t>{50},
        std::optional<std::uint64_t>{10}, std::optional<std::uint64_t>{3},
        std::optional<std::uint64_t>{1}}) {
    m.cell_count = cells;
    double mean = 0.0;
    for (const auto& p : generate_pulses_serial(m, 20000, 10)) mean += p.true_detected;
    mean /= 20000;
    CHECK(mean <= prev);
    prev = mean;
  }
  CHECK(prev <= 1.0);
}

TEST_CASE("run: determinism across calls and thread counts") {
  SimConfig cfg{fixtures::table1_detector(), 20000, 12345, std::nullopt};
  const auto a = run(cfg, 1);
  const auto b = run(cfg, 4);
  const auto c = run_serial(cfg);
  CHECK(a.pulses == b.pulses);
  CHECK(a.pulses == c.pulses);
  CHECK(a.histogram == b.histogram);
  CHECK(a.histogram == c.histogram);
  cfg.seed = 12346;
  CHECK_FALSE(run(cfg, 2).pulses == a.pulses);
}

TEST_CASE("run: histogram covers every pulse with the configured width") {
  SimConfig cfg{fixtures::table1_detector(), 30000, 5, std::nullopt};
  const auto r = run(cfg);
  const auto& h = r.histogram;
  CHECK(h.total_pulses() == 30000);
  CHECK(h.in_range() == 30000);
  CHECK(h.bin_right(0) - h.bin_left(0) == doctest::Approx(135.0 / 12.0));
  double lo = r.pulses[0].area, hi = lo;
  for (const auto& p : r.pulses) {
    lo = std::min(lo, p.area);
    hi = std::max(hi, p.area);
  }
  CHECK(h.edges().front() == lo);
  CHECK(h.edges().back() >= hi);

  cfg.bin_width = 5.0;
  CHECK(run(cfg).histogram.bin_right(3) - run(cfg).histogram.bin_left(3) == doctest::Approx(5.0));
}

TEST_CASE("run: config validation and capacity") {
  SimConfig cfg{fixtures::table1_detector(), kMaxPulses + 1, 1, std::nullopt};
  CHECK_THROWS_AS(run(cfg), CapacityError);
  cfg.n_pulses = 0;
  CHECK_THROWS_AS(run(cfg), InvalidInput);
  cfg.n_pulses = 10;
  cfg.bin_width = -1.0;
  CHECK_THROWS_AS(run(cfg), InvalidInput);
}

TEST_CASE("CounterRng: streams are reproducible and distinct") {
  CounterRng a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  CounterRng u(1, 0);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    mean += v;
  }
  CHECK(std::abs(mean / 100000 - 0.5) < 0.005);
}
