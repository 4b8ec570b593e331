// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include "pnr/simulate.hpp"

namespace {

pnr::DetectorModel detector() {
  pnr::DetectorModel m;
  m.mean_photon_number = 3.0 / 0.85;
  m.quantum_efficiency = 0.85;
  m.gain_per_photon = 135.0;
  m.mult_noise_var = 276.0;
  m.electronic_noise_var = 112.36;
  m.extra_per_photon_var = 246.0;
  m.area_offset = 450.0;
  return m;
}

void BM_GenerateSerial(benchmark::State& state) {
  const auto m = detector();
  for (auto _ : state)
    benchmark::DoNotOptimize(pnr::generate_pulses_serial(m, state.range(0), 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GenerateParallel(benchmark::State& state) {
  const auto m = detector();
  for (auto _ : state)
    benchmark::DoNotOptimize(pnr::generate_pulses_parallel(m, state.range(0), 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BinSerial(benchmark::State& state) {
  const auto pulses = pnr::generate_pulses_parallel(detector(), state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(pnr::bin_pulses_serial(pulses, 135.0 / 12.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BinParallel(benchmark::State& state) {
  const auto pulses = pnr::generate_pulses_parallel(detector(), state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(pnr::bin_pulses_parallel(pulses, 135.0 / 12.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_GenerateSerial)->Arg(100000)->Arg(1000000);
BENCHMARK(BM_GenerateParallel)->Arg(100000)->Arg(1000000);
BENCHMARK(BM_BinSerial)->Arg(100000)->Arg(1000000);
BENCHMARK(BM_BinParallel)->Arg(100000)->Arg(1000000);

BENCHMARK_MAIN();
