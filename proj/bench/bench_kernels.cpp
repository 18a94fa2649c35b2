#include <benchmark/benchmark.h>

#include <random>

#include "beamkit/config.hpp"
#include "beamkit/kernels.hpp"
#include "beamkit/model.hpp"

namespace {

beamkit::CMatrix random_beamformer(int n_tx, int k) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  beamkit::CMatrix f(n_tx, k);
  for (int i = 0; i < n_tx; ++i)
    for (int j = 0; j < k; ++j) f(i, j) = {g(rng), g(rng)};
  return f;
}

std::vector<double> scan_angles(int n) {
  std::vector<double> a(n);
  for (int i = 0; i < n; ++i) a[i] = -beamkit::kPi / 2 + beamkit::kPi * i / (n - 1);
  return a;
}

void BM_BeampatternSerial(benchmark::State& state) {
  const auto cfg = beamkit::table1_config();
  const auto f = random_beamformer(static_cast<int>(state.range(0)), 4);
  const auto angles = scan_angles(1801);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        beamkit::beampattern_scan_serial(f, angles, cfg.antenna_spacing, cfg.carrier_wavelength));
  }
}

void BM_BeampatternOmp(benchmark::State& state) {
  const auto cfg = beamkit::table1_config();
  const auto f = random_beamformer(static_cast<int>(state.range(0)), 4);
  const auto angles = scan_angles(1801);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        beamkit::beampattern_scan(f, angles, cfg.antenna_spacing, cfg.carrier_wavelength));
  }
}

void BM_GainMatrixSerial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto rows = random_beamformer(256, n);
  const auto f = random_beamformer(n, 8);
  for (auto _ : state) benchmark::DoNotOptimize(beamkit::gain_matrix_serial(rows, f));
}

void BM_GainMatrixOmp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto rows = random_beamformer(256, n);
  const auto f = random_beamformer(n, 8);
  for (auto _ : state) benchmark::DoNotOptimize(beamkit::gain_matrix(rows, f));
}

}  // namespace

BENCHMARK(BM_BeampatternSerial)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(BM_BeampatternOmp)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(BM_GainMatrixSerial)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(BM_GainMatrixOmp)->Arg(16)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
