// Engine throughput and compiler cost.

#include <benchmark/benchmark.h>

#include "nfsm/adversary.hpp"
#include "nfsm/coloring.hpp"
#include "nfsm/engine.hpp"
#include "nfsm/generators.hpp"
#include "nfsm/mis.hpp"
#include "nfsm/multi_letter_compiler.hpp"
#include "nfsm/pipeline.hpp"
#include "nfsm/synchronizer.hpp"

namespace {

using namespace nfsm;

NetworkGraph sparse_gnp(std::size_t n, std::uint64_t seed) {
  GraphSpec s;
  s.family = GraphFamily::kGnp;
  s.n = n;
  s.seed = seed;
  s.avg_degree = 2;
  return generate_graph(s);
}

NetworkGraph tree(std::size_t n, std::uint64_t seed) {
  GraphSpec s;
  s.family = GraphFamily::kRandomTree;
  s.n = n;
  s.seed = seed;
  return generate_graph(s);
}

const Pipeline& mis_pipeline() {
  static const Pipeline pl = build_pipeline(build_mis_protocol());
  return pl;
}

void BM_SyncMis(benchmark::State& state) {
  const auto g = sparse_gnp(static_cast<std::size_t>(state.range(0)), 1);
  const auto p = build_mis_protocol();
  const auto inputs = uniform_inputs(g, mis_id(MisState::kDown1));
  std::uint64_t seed = 0, steps = 0;
  for (auto _ : state) {
    const auto r = run_sync(p, g, inputs, ++seed);
    steps += r.report.events;
    benchmark::DoNotOptimize(r.output_states.data());
  }
  state.counters["node_steps/s"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SyncMis)->RangeMultiplier(4)->Range(64, 16384)->Unit(benchmark::kMillisecond);

void BM_SyncColoring(benchmark::State& state) {
  const auto g = tree(static_cast<std::size_t>(state.range(0)), 1);
  const auto p = build_coloring_protocol();
  const auto inputs = uniform_inputs(g, ColoringLayout::kRound1);
  std::uint64_t seed = 0, steps = 0;
  for (auto _ : state) {
    const auto r = run_sync(p, g, inputs, ++seed);
    steps += r.report.events;
    benchmark::DoNotOptimize(r.output_states.data());
  }
  state.counters["node_steps/s"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SyncColoring)->RangeMultiplier(4)->Range(64, 16384)->Unit(benchmark::kMillisecond);

void BM_AsyncCompiledMis(benchmark::State& state) {
  const auto& pl = mis_pipeline();
  const auto g = sparse_gnp(static_cast<std::size_t>(state.range(0)), 1);
  const auto inputs = uniform_inputs(g, mis_id(MisState::kDown1));
  std::uint64_t seed = 0, events = 0;
  for (auto _ : state) {
    ++seed;
    const auto r = run_pipeline(pl, g, inputs, UniformAdversary(seed), seed);
    events += r.report.events;
    benchmark::DoNotOptimize(r.output_states.data());
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_AsyncCompiledMis)->RangeMultiplier(4)->Range(16, 256)->Unit(benchmark::kMillisecond);

void BM_LowerMis(benchmark::State& state) {
  const auto p = build_mis_protocol();
  for (auto _ : state) benchmark::DoNotOptimize(compile_multi_letter(p).protocol.num_states());
}
BENCHMARK(BM_LowerMis)->Unit(benchmark::kMillisecond);

void BM_SynchronizeMis(benchmark::State& state) {
  const auto lowered = compile_multi_letter(build_mis_protocol());
  for (auto _ : state) benchmark::DoNotOptimize(compile_synchronizer(lowered.protocol).protocol.num_states());
}
BENCHMARK(BM_SynchronizeMis)->Unit(benchmark::kMillisecond);

void BM_PipelineColoring(benchmark::State& state) {
  const auto p = build_coloring_protocol();
  for (auto _ : state) benchmark::DoNotOptimize(build_pipeline(p).compiled.protocol.num_states());
}
BENCHMARK(BM_PipelineColoring)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
