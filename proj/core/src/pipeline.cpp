#include "nfsm/pipeline.hpp"

#include <algorithm>

#include "nfsm/stats.hpp"

namespace nfsm {

std::vector<StateId> Pipeline::compiled_inputs(std::span<const StateId> source_inputs) const {
  std::vector<StateId> out(source_inputs.size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = compiled_input(source_inputs[v]);
  return out;
}

std::vector<StateId> Pipeline::source_states(std::span<const StateId> compiled_states) const {
  std::vector<StateId> out(compiled_states.size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = source_of(compiled_states[v]);
  return out;
}

Pipeline build_pipeline(const MultiLetterProtocol& p, const MultiLetterCompileOptions& lower,
                        const SynchronizerOptions& sync) {
  auto lowered = compile_multi_letter(p, lower);
  auto compiled = compile_synchronizer(lowered.protocol, sync);
  return Pipeline{p, std::move(lowered), std::move(compiled)};
}

RunResult run_pipeline(const Pipeline& pl, const NetworkGraph& g, std::span<const StateId> source_inputs,
                       const AdversaryPolicy& adv, std::uint64_t rng_seed, RunOptions opts) {
  if (!opts.key_fn) opts.keying = ChoiceKeying::kPerChoice;
  const auto inputs = pl.compiled_inputs(source_inputs);
  return run_async(pl.compiled.protocol, g, inputs, adv, rng_seed, opts);
}

std::vector<std::vector<StateId>> simulated_history(const Pipeline& pl, const ExecutionTrace& t) {
  const std::size_t n = t.num_nodes;
  std::vector<std::vector<StateId>> per_node(n);
  std::vector<std::uint64_t> phases(n, 0);
  const std::size_t k = pl.lowered.subrounds;
  for (NodeId v = 0; v < n; ++v) per_node[v].push_back(pl.source_of(t.initial_states[v]));
  for (const TraceEvent& e : t.events) {
    // Every simulated subround ends with the node's only non-eps transmission of it.
    if (e.kind != EventKind::kStepEnd || e.letter == kEpsilon) continue;
    if (++phases[e.node] % k != 0) continue;
    const StateId lowered_state = pl.compiled.source_of(e.after);
    per_node[e.node].push_back(pl.lowered.source_of(lowered_state));
  }
  std::size_t rounds = 0;
  for (const auto& s : per_node) rounds = std::max(rounds, s.size());
  std::vector<std::vector<StateId>> rows(rounds, std::vector<StateId>(n, kNoLetter));
  for (NodeId v = 0; v < n; ++v)
    for (std::size_t r = 0; r < per_node[v].size(); ++r) rows[r][v] = per_node[v][r];
  return rows;
}

EquivalenceCase run_equivalence(const Pipeline& pl, const NetworkGraph& g, std::span<const StateId> inputs,
                                const AdversaryPolicy& adv, std::uint64_t seed, const EquivalenceOptions& opts) {
  EquivalenceCase c;
  c.seed = seed;
  RunOptions ro;
  ro.keying = ChoiceKeying::kPerChoice;
  ro.max_events = opts.max_events;
  const auto ref = run_sync(pl.source, g, inputs, seed, ro);
  const auto got = run_pipeline(pl, g, inputs, adv, seed, ro);
  c.sync_rounds = ref.report.run_time;
  c.async_run_time = got.report.run_time;
  c.async_events = got.report.events;
  c.overhead = c.sync_rounds > 0 ? c.async_run_time / c.sync_rounds : 0;
  const auto outputs = pl.source_states(got.output_states);
  c.identical = outputs == ref.output_states;
  if (c.identical) return c;

  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (outputs[v] != ref.output_states[v]) {
      c.message = "node " + std::to_string(v) + ": reference " + pl.source.state_name(ref.output_states[v]) +
                  ", compiled " + pl.source.state_name(outputs[v]);
      break;
    }
  }
  if (ref.report.events > opts.diagnose_limit) return c;
  ro.trace = TraceMode::kFull;
  const auto ref_full = run_sync(pl.source, g, inputs, seed, ro);
  const auto got_full = run_pipeline(pl, g, inputs, adv, seed, ro);
  const auto expected = state_history(ref_full.trace);
  const auto simulated = simulated_history(pl, got_full.trace);
  for (std::size_t r = 0; r < std::min(expected.size(), simulated.size()) && !c.diverging_round; ++r) {
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      if (simulated[r][v] != kNoLetter && simulated[r][v] != expected[r][v]) {
        c.diverging_round = r;
        break;
      }
    }
  }
  return c;
}

EquivalenceReport equivalence_harness(const Pipeline& pl, const NetworkGraph& g, std::span<const StateId> inputs,
                                      const AdversaryPolicy& adv, std::span<const std::uint64_t> seeds,
                                      const EquivalenceOptions& opts) {
  EquivalenceReport report;
  std::vector<double> overheads;
  for (std::uint64_t seed : seeds) {
    report.cases.push_back(run_equivalence(pl, g, inputs, adv, seed, opts));
    report.identical += report.cases.back().identical ? 1 : 0;
    if (report.cases.back().sync_rounds > 0) overheads.push_back(report.cases.back().overhead);
  }
  if (!overheads.empty()) report.median_overhead = median(overheads);
  return report;
}

}  // namespace nfsm
