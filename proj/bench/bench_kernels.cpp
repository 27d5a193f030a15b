// Serial reference vs OpenMP kernels.
#include <benchmark/benchmark.h>

#include <random>

#include "s4h/kernels.hpp"
#include "s4h/synth.hpp"

using namespace s4h;

namespace {

std::vector<double> beat_times(double seconds, double hr_bpm) {
  std::vector<double> t;
  for (double x = 0.4; x < seconds; x += 60.0 / hr_bpm) t.push_back(x);
  return t;
}

template <auto Kernel>
void BM_Render(benchmark::State& state) {
  const double fs = 250.0;
  const double seconds = static_cast<double>(state.range(0));
  const auto beats = beat_times(seconds, 72.0);
  std::vector<double> out(static_cast<std::size_t>(seconds * fs));
  for (auto _ : state) {
    std::fill(out.begin(), out.end(), 0.0);
    Kernel(out, 0, fs, beats, kEcgTemplate);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
  state.counters["threads"] = kernels::max_threads();
}

std::vector<std::vector<double>> windows(std::size_t count) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> rr(830.0, 40.0);
  std::vector<std::vector<double>> w(count);
  for (auto& v : w) {
    v.resize(72);
    for (auto& x : v) x = rr(rng);
  }
  return w;
}

template <auto Kernel>
void BM_BatchHrv(benchmark::State& state) {
  const auto w = windows(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto r = Kernel(w);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = kernels::max_threads();
}

}  // namespace

BENCHMARK(BM_Render<kernels::render_beats_serial>)->Name("render/serial")->Arg(60)->Arg(600);
BENCHMARK(BM_Render<kernels::render_beats_omp>)->Name("render/omp")->Arg(60)->Arg(600);
BENCHMARK(BM_BatchHrv<kernels::batch_hrv_serial>)->Name("batch_hrv/serial")->Arg(1000)->Arg(10000);
BENCHMARK(BM_BatchHrv<kernels::batch_hrv_omp>)->Name("batch_hrv/omp")->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
