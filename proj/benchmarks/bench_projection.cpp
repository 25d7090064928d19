#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "spslab/cone_projection.hpp"
#include "spslab/step_function.hpp"

using namespace spslab;

namespace {

StepFunction<double> random_step(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  std::vector<double> breaks(n + 1), values(n);
  for (std::size_t i = 0; i <= n; ++i) breaks[i] = double(i) / double(n);
  for (auto& v : values) v = value(rng);
  return StepFunction<double>(std::move(breaks), std::move(values));
}

}  // namespace

static void BM_PavaIsotonic(benchmark::State& state) {
  const auto f = random_step(std::size_t(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(pava_isotonic(f));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PavaIsotonic)->RangeMultiplier(8)->Range(16, 8192)->Complexity();

static void BM_ProjectWithEnvelope(benchmark::State& state) {
  const auto f = random_step(std::size_t(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(project_monotone(f));
}
BENCHMARK(BM_ProjectWithEnvelope)->RangeMultiplier(8)->Range(16, 8192);

static void BM_ConeCertificates(benchmark::State& state) {
  const auto f = random_step(std::size_t(state.range(0)), 3);
  const auto p = pava_isotonic(f);
  for (auto _ : state) benchmark::DoNotOptimize(cone_certificates(f, p, 17, 1e-10));
}
BENCHMARK(BM_ConeCertificates)->RangeMultiplier(8)->Range(16, 1024);
