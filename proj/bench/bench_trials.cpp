#include <benchmark/benchmark.h>

#include "suremap/benchmark.hpp"
#include "suremap/simulate.hpp"

using namespace suremap;

namespace {

// A ten-task synthetic dataset large enough that every group passes the threshold.
const Dataset& dataset() {
    static const Dataset data = [] {
        SyntheticSpec spec = default_synthetic_spec();
        spec.n_min = 40;
        spec.n_max = 80;
        const PriorStructure structure(spec.space);
        return simulate_rows(spec, simulate(spec, structure, 1, 0), 1, 0);
    }();
    return data;
}

BenchmarkSpec spec_for(int trials) {
    BenchmarkSpec spec;
    spec.methods = {"naive", "pooled", "suremap", "mt-offset", "mt-suremap"};
    spec.rates = {0.1, 0.5};
    spec.trials = trials;
    spec.seed = 3;
    spec.options.global.fallback_pooled = true;
    return spec;
}

void BM_TrialsSerial(benchmark::State& state) {
    const BenchmarkPlan plan = plan_benchmark(dataset(), spec_for(static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(run_trials_serial(plan));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(plan.trials * plan.spec.rates.size()));
}

void BM_TrialsParallel(benchmark::State& state) {
    const BenchmarkPlan plan = plan_benchmark(dataset(), spec_for(static_cast<int>(state.range(0))));
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(run_trials_parallel(plan, threads));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(plan.trials * plan.spec.rates.size()));
}

}  // namespace

BENCHMARK(BM_TrialsSerial)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsParallel)->Args({8, 2})->Args({32, 2})->Args({32, 4})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
