#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "spslab/domain.hpp"
#include "spslab/lagrangian_solver.hpp"
#include "spslab/measure.hpp"
#include "spslab/particle_engine.hpp"
#include "spslab/step_function.hpp"
#include "support/generators.hpp"

using namespace spslab;

static void BM_SimulateFreeLine(benchmark::State& state) {
  std::mt19937_64 rng(11);
  const auto atoms = testgen::free_atoms<double>(rng, std::size_t(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate(atoms, Domain<double>::real_line()));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SimulateFreeLine)->RangeMultiplier(4)->Range(8, 512)->Complexity();

static void BM_SimulateBox(benchmark::State& state) {
  std::mt19937_64 rng(12);
  const auto atoms = testgen::box_atoms<double>(rng, std::size_t(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate(atoms, Domain<double>::interval(0.0, 1.0)));
}
BENCHMARK(BM_SimulateBox)->RangeMultiplier(4)->Range(8, 512);

static void BM_QuantileQueries(benchmark::State& state) {
  std::mt19937_64 rng(13);
  const auto atoms = testgen::free_atoms<double>(rng, std::size_t(state.range(0)));
  const auto log = simulate(atoms, Domain<double>::real_line());
  const double span = to_double(*log.equilibrium_time()) + 1.0;
  std::uniform_real_distribution<double> pick(0.0, span);
  for (auto _ : state) benchmark::DoNotOptimize(log.quantile_at(pick(rng)));
}
BENCHMARK(BM_QuantileQueries)->RangeMultiplier(4)->Range(8, 512);

static void BM_ClosedFormQuantile(benchmark::State& state) {
  std::mt19937_64 rng(14);
  const auto atoms = testgen::free_atoms<double>(rng, std::size_t(state.range(0)));
  const auto sol = LagrangianSolution<double>::from_measure(DiscreteMeasure<double>(atoms));
  std::uniform_real_distribution<double> pick(0.0, 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_quantile(sol, pick(rng)));
}
BENCHMARK(BM_ClosedFormQuantile)->RangeMultiplier(4)->Range(8, 512);

static void BM_Wasserstein(benchmark::State& state) {
  std::mt19937_64 rng(15);
  const DiscreteMeasure<double> mu(testgen::free_atoms<double>(rng, std::size_t(state.range(0))));
  const DiscreteMeasure<double> nu(testgen::free_atoms<double>(rng, std::size_t(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein2_sq(mu, nu));
}
BENCHMARK(BM_Wasserstein)->RangeMultiplier(4)->Range(8, 512);
