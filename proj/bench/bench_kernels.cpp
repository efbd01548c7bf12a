#include <benchmark/benchmark.h>

#include "kmm/closed_form.hpp"
#include "kmm/frontier.hpp"
#include "kmm/simulation.hpp"

namespace {

const kmm::MarketParams kMarket(0.1, 0.05, 0.2, 4.0, 1.0);

kmm::ClosedFormSolution base_solution() {
    const kmm::GaussianSOD sod(0.1, kmm::sigma_mu_from_sigma0(2.0, kMarket));
    return kmm::solve_crra(kMarket, sod, -0.5, 1.0 / 3.0, 1.0);
}

kmm::SimConfig sim_config(benchmark::State& state) {
    kmm::SimConfig cfg;
    cfg.n_paths = static_cast<std::size_t>(state.range(0));
    cfg.n_steps = 256;
    cfg.seed = 7;
    return cfg;
}

void BM_ReplicationSerial(benchmark::State& state) {
    const auto sol = base_solution();
    const auto cfg = sim_config(state);
    for (auto _ : state) benchmark::DoNotOptimize(kmm::simulate_replication_serial(sol, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ReplicationParallel(benchmark::State& state) {
    const auto sol = base_solution();
    const auto cfg = sim_config(state);
    for (auto _ : state) benchmark::DoNotOptimize(kmm::simulate_replication(sol, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

const kmm::DiscreteSOD kTwoPriors({{0.15, 2.0 / 3.0}, {0.09, 1.0 / 3.0}});

void BM_FrontierSerial(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(kmm::trace_frontier_serial(n, kTwoPriors, kMarket, kmm::Crra{1.0 / 3.0}, 1.0));
}

void BM_FrontierParallel(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(kmm::trace_frontier(n, kTwoPriors, kMarket, kmm::Crra{1.0 / 3.0}, 1.0));
}

}  // namespace

BENCHMARK(BM_ReplicationSerial)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicationParallel)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FrontierSerial)->Arg(21)->Arg(101)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FrontierParallel)->Arg(21)->Arg(101)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
