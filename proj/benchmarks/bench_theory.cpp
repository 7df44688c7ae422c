#include <benchmark/benchmark.h>

#include "pmlab/theory.hpp"

using namespace pmlab;

static void BM_DemandEvaluation(benchmark::State& state) {
    TheoryParams p;
    p.alpha_grid_size = static_cast<int>(state.range(0));
    const DemandModel model(p);
    double price = 0.05;
    for (auto _ : state) {
        benchmark::DoNotOptimize(model(price));
        price = price < 0.9 ? price + 0.01 : 0.05;
    }
}
BENCHMARK(BM_DemandEvaluation)->Arg(500)->Arg(2'000)->Arg(8'000);

static void BM_SolveEquilibrium(benchmark::State& state) {
    TheoryParams p;
    p.alpha_grid_size = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(solve_equilibrium(p));
}
BENCHMARK(BM_SolveEquilibrium)->Arg(2'000)->Arg(8'000)->Unit(benchmark::kMillisecond);

static void BM_BiasSweep(benchmark::State& state) {
    const TheoryParams p;
    const std::vector<double> horizons{0.0, 4.0 / 365.0, 0.25, 0.5, 1.0, 2.0, 5.0};
    for (auto _ : state) benchmark::DoNotOptimize(bias_sweep(p, horizons));
}
BENCHMARK(BM_BiasSweep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
