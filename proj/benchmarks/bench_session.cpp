#include <benchmark/benchmark.h>

#include <sstream>

#include "pmlab/analysis.hpp"
#include "pmlab/session.hpp"

using namespace pmlab;

// One scripted session per iteration for the requested treatment cell.
static void BM_ScriptedSession(benchmark::State& state) {
    const TreatmentConfig c = TreatmentConfig::standard_cell(static_cast<int>(state.range(0)), 0.05);
    std::uint64_t index = 0;
    for (auto _ : state) benchmark::DoNotOptimize(run_session(c, 7, index++));
}
BENCHMARK(BM_ScriptedSession)->DenseRange(1, 4)->Unit(benchmark::kMicrosecond);

static void BM_LogRoundTrip(benchmark::State& state) {
    const SessionLog log = run_session(TreatmentConfig::standard_cell(1, 0.05), 7, 0);
    for (auto _ : state) {
        std::istringstream in(session_log_to_string(log));
        benchmark::DoNotOptimize(read_session_log(in));
    }
}
BENCHMARK(BM_LogRoundTrip)->Unit(benchmark::kMicrosecond);

static void BM_SummaryTable(benchmark::State& state) {
    std::vector<SessionMetrics> metrics;
    std::uint64_t index = 0;
    for (int cell = 1; cell <= 4; ++cell) {
        for (int i = 0; i < 40; ++i) {
            metrics.push_back(compute_metrics(run_session(TreatmentConfig::standard_cell(cell, 0.05), 7, index++),
                                              PriceMeasure::LastTrade));
        }
    }
    for (auto _ : state) benchmark::DoNotOptimize(summary_table(metrics, PriceMeasure::LastTrade));
}
BENCHMARK(BM_SummaryTable)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
