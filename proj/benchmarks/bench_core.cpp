#include <benchmark/benchmark.h>

#include <limits>
#include <numbers>

#include "rmhd/besov.hpp"
#include "rmhd/dispersion.hpp"
#include "rmhd/fft.hpp"
#include "rmhd/mhd.hpp"
#include "rmhd/ops.hpp"
#include "rmhd/random.hpp"

using namespace rmhd;

namespace {

constexpr double kPi = std::numbers::pi;

SpectralField sample_field(int n, int ncomp, std::uint64_t seed) {
  return random_field(Grid::cube(n, 2 * kPi), ncomp, shell_spectrum(2.0, 1.0), 1.0, seed);
}

void BM_RoundTripFft(benchmark::State& st) {
  auto f = sample_field(static_cast<int>(st.range(0)), 3, 1);
  for (auto _ : st) benchmark::DoNotOptimize(to_spectral(to_physical(f)));
  st.SetItemsProcessed(st.iterations() * f.grid().size() * 3);
}
BENCHMARK(BM_RoundTripFft)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Advect(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  auto u = sample_field(n, 3, 2), b = sample_field(n, 3, 3);
  for (auto _ : st) benchmark::DoNotOptimize(advect(u, b));
}
BENCHMARK(BM_Advect)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_MhdStep(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  auto u = sample_field(n, 3, 4), b = sample_field(n, 3, 5);
  MhdStepper stepper(u.grid(), 0.1, 0.05, 0.05, 0.005);
  SpectralField ub = stack(u, b);
  for (auto _ : st) benchmark::DoNotOptimize(stepper.step(ub, 0.0));
}
BENCHMARK(BM_MhdStep)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_BesovNorm(benchmark::State& st) {
  auto f = sample_field(static_cast<int>(st.range(0)), 3, 6);
  for (auto _ : st) benchmark::DoNotOptimize(besov_norm(f, 0.5, 2.0, 2.0));
}
BENCHMARK(BM_BesovNorm)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_BesovNormLinf(benchmark::State& st) {
  auto f = sample_field(static_cast<int>(st.range(0)), 3, 7);
  for (auto _ : st) benchmark::DoNotOptimize(besov_norm(f, 0.0, std::numeric_limits<double>::infinity(), 1.0));
}
BENCHMARK(BM_BesovNormLinf)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_DispersionSample(benchmark::State& st) {
  FrequencyProfile p;
  const double lambda = static_cast<double>(st.range(0));
  for (auto _ : st) {
    ToroidalSample s(p, lambda, 0.0);
    benchmark::DoNotOptimize(s.lebesgue(std::numeric_limits<double>::infinity()));
  }
}
BENCHMARK(BM_DispersionSample)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
