#include <benchmark/benchmark.h>

#include <random>

#include "popdyn/closedloop.hpp"
#include "popdyn/passivity.hpp"
#include "popdyn/stochastic.hpp"

using namespace popdyn;

namespace {

SimplexState sample_state() { return SimplexState({0.5, 0.3, 0.2}, 1.0); }
PayoffVector sample_payoff() { return PayoffVector({0.4, -1.2, 0.7}); }

void BM_MeanDynamicBNN(benchmark::State& state) {
  Protocol p = bnn_protocol(3);
  SimplexState z = sample_state();
  PayoffVector r = sample_payoff();
  for (auto _ : state) benchmark::DoNotOptimize(mean_dynamic(p, z, r));
}
BENCHMARK(BM_MeanDynamicBNN);

void BM_MeanDynamicSmith(benchmark::State& state) {
  Protocol p = smith_protocol(3);
  SimplexState z = sample_state();
  PayoffVector r = sample_payoff();
  for (auto _ : state) benchmark::DoNotOptimize(mean_dynamic(p, z, r));
}
BENCHMARK(BM_MeanDynamicSmith);

void BM_MeanDynamicLogit(benchmark::State& state) {
  Protocol p = logit_protocol(3, 0.5);
  SimplexState z = sample_state();
  PayoffVector r = sample_payoff();
  for (auto _ : state) benchmark::DoNotOptimize(mean_dynamic(p, z, r));
}
BENCHMARK(BM_MeanDynamicLogit);

void BM_IntegrateCongestion(benchmark::State& state) {
  PdmModel pdm = memoryless_pdm(congestion_example());
  Protocol bnn = bnn_protocol(3);
  SimplexState x0({0.8, 0.1, 0.1}, 1.0);
  double T = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(integrate(pdm, bnn, x0, T, 0.01));
}
BENCHMARK(BM_IntegrateCongestion)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_StorageEvalLogit(benchmark::State& state) {
  StorageFunction s = logit_storage(3, 1.0);
  SimplexState z = sample_state();
  PayoffVector r = sample_payoff();
  for (auto _ : state) benchmark::DoNotOptimize(storage_eval(s, z, r));
}
BENCHMARK(BM_StorageEvalLogit);

void BM_JumpProcessDemandResponse(benchmark::State& state) {
  PopulationGame g = demand_response_example();
  PdmModel pdm = memoryless_pdm(g);
  Protocol smith = smith_protocol(3);
  SimplexState x0 = uniform_state(3);
  PdmState q0(g.payoff_fn(x0.entries));
  int N = static_cast<int>(state.range(0));
  JumpSimOptions opts;
  opts.record_events = false;
  uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        simulate_finite_population(N, smith, pdm, x0, q0, 5.0, 25.0, seed++, opts));
}
BENCHMARK(BM_JumpProcessDemandResponse)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_NashSetTaskAllocation(benchmark::State& state) {
  PopulationGame g = task_allocation_example();
  for (auto _ : state) benchmark::DoNotOptimize(nash_set(g, 60, 1e-8));
}
BENCHMARK(BM_NashSetTaskAllocation)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
