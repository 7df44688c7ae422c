#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pmlab/orderbook.hpp"

using namespace pmlab;

namespace {

std::vector<OrderRequest> random_flow(std::size_t n, int agents, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<OrderRequest> flow;
    flow.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        OrderRequest r;
        r.agent = static_cast<AgentId>(gen() % static_cast<std::uint64_t>(agents));
        r.contract = gen() % 2 ? Contract::Yes : Contract::No;
        r.side = Side::Buy;  // buys never fail for lack of holdings
        r.quantity = 1 + static_cast<Quantity>(gen() % 50);
        r.limit_ticks = 35 + static_cast<int>(gen() % 31);
        flow.push_back(r);
    }
    return flow;
}

}  // namespace

static void BM_SubmitCrossingFlow(benchmark::State& state) {
    const auto flow = random_flow(static_cast<std::size_t>(state.range(0)), 10, 42);
    std::size_t fills = 0;
    for (auto _ : state) {
        Book book;
        for (AgentId a = 0; a < 10; ++a) book.open_account(a, 10'000'000 * kCentsPerDollar);
        for (const OrderRequest& r : flow) fills += book.submit(r).fills.size();
        benchmark::DoNotOptimize(book.escrow());
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * state.range(0));
    state.counters["fills/iter"] = static_cast<double>(fills) / static_cast<double>(state.iterations());
}
BENCHMARK(BM_SubmitCrossingFlow)->Arg(1'000)->Arg(10'000)->Arg(100'000);

// Sweeps a deep one-sided book with a single aggressive order.
static void BM_SweepDeepBook(benchmark::State& state) {
    const int levels = static_cast<int>(state.range(0));
    for (auto _ : state) {
        state.PauseTiming();
        Book book;
        book.open_account(0, 100'000'000);
        book.open_account(1, 100'000'000);
        for (int i = 0; i < levels; ++i) book.submit({0, Contract::Yes, Side::Buy, 10, 1 + i % 98});
        state.ResumeTiming();
        benchmark::DoNotOptimize(book.submit({1, Contract::No, Side::Buy, static_cast<Quantity>(levels) * 10, 99}));
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * levels);
}
BENCHMARK(BM_SweepDeepBook)->Arg(100)->Arg(1'000)->Arg(10'000);

static void BM_CancelAll(benchmark::State& state) {
    for (auto _ : state) {
        state.PauseTiming();
        Book book;
        book.open_account(0, 100'000'000);
        for (int i = 0; i < state.range(0); ++i) book.submit({0, Contract::Yes, Side::Buy, 1, 1 + i % 49});
        state.ResumeTiming();
        benchmark::DoNotOptimize(book.cancel_all(0));
    }
}
BENCHMARK(BM_CancelAll)->Arg(1'000)->Arg(10'000);

BENCHMARK_MAIN();
