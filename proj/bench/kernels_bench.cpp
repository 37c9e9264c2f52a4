// Serial reference vs OpenMP kernels. Run with --benchmark_filter to pick one.
#include <benchmark/benchmark.h>

#include "dcfcl/affinity.hpp"
#include "dcfcl/data.hpp"
#include "dcfcl/game.hpp"
#include "dcfcl/instances.hpp"
#include "dcfcl/simulator.hpp"

namespace {

using namespace dcfcl;

AffinityGraph graph_for(int k) {
  const auto snaps = random_snapshots(k, 64, 7);
  return build_affinity_graph(snaps, 0.8);
}

void BM_TableSerial(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const auto graph = graph_for(k);
  const auto set = all_coalitions(k);
  for (auto _ : state) benchmark::DoNotOptimize(build_benefit_table_serial(graph, set));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(set.size()));
}

void BM_TableParallel(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const auto graph = graph_for(k);
  const auto set = all_coalitions(k);
  for (auto _ : state) benchmark::DoNotOptimize(build_benefit_table(graph, set));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(set.size()));
}

void BM_BruteForceSerial(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const auto table = random_uniform_table(k, 11);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_equilibria_serial(table, k));
}

void BM_BruteForceParallel(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const auto table = random_uniform_table(k, 11);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_equilibria(table, k));
}

void BM_MergeBlocking(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const auto table = random_affinity_table(k, 64, 0.8, 5);
  for (auto _ : state) benchmark::DoNotOptimize(merge_blocking(table, Partition::singletons(k)));
}

void run_small(benchmark::State& state, bool parallel) {
  RunConfig cfg;
  cfg.scenario.num_clients = 8;
  cfg.scenario.num_tasks = 2;
  cfg.scenario.samples_per_class = 60;
  cfg.rounds = 4;
  cfg.hp.local_iters = 20;
  cfg.benefit_correlation = false;
  cfg.parallel_clients = parallel;
  const auto scenario = build_scenario(cfg.scenario);
  for (auto _ : state) benchmark::DoNotOptimize(run(cfg, scenario));
}

void BM_RunSerialClients(benchmark::State& state) { run_small(state, false); }
void BM_RunParallelClients(benchmark::State& state) { run_small(state, true); }

}  // namespace

BENCHMARK(BM_TableSerial)->DenseRange(10, 16, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TableParallel)->DenseRange(10, 16, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BruteForceSerial)->DenseRange(6, 8, 1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BruteForceParallel)->DenseRange(6, 8, 1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MergeBlocking)->DenseRange(6, 12, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunSerialClients)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunParallelClients)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
