#include <benchmark/benchmark.h>

#include "spslab/bombardment.hpp"
#include "spslab/scalar.hpp"

using namespace spslab;

static void BM_RecursionFloat(benchmark::State& state) {
  const auto fam = GeometricBombardment<double>::reference();
  for (auto _ : state)
    benchmark::DoNotOptimize(run_recursion(fam, std::size_t(state.range(0))));
}
BENCHMARK(BM_RecursionFloat)->Arg(20)->Arg(40);

static void BM_RecursionRational(benchmark::State& state) {
  const auto fam = GeometricBombardment<Rational>::reference();
  for (auto _ : state)
    benchmark::DoNotOptimize(run_recursion(fam, std::size_t(state.range(0))));
}
BENCHMARK(BM_RecursionRational)->Arg(20)->Arg(40)->Arg(60);

static void BM_EngineCrossValidation(benchmark::State& state) {
  const auto fam = GeometricBombardment<double>::reference();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        cross_validate_with_engine(fam, std::size_t(state.range(0)), 1e-9));
}
BENCHMARK(BM_EngineCrossValidation)->Arg(12)->Arg(24);
