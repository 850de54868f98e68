#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nfsm/adversary.hpp"
#include "nfsm/engine.hpp"
#include "nfsm/graph.hpp"
#include "nfsm/multi_letter.hpp"
#include "nfsm/multi_letter_compiler.hpp"
#include "nfsm/synchronizer.hpp"

namespace nfsm {

/// A multi-letter protocol lowered to single-letter queries and then synchronized, with
/// the maps back to the source states.
struct Pipeline {
  MultiLetterProtocol source;
  MultiLetterCompilation lowered;
  CompiledProtocol compiled;

  StateId compiled_input(StateId source_state) const {
    return compiled.compiled_input(lowered.entry_state.at(source_state));
  }
  StateId source_of(StateId compiled_state) const { return lowered.source_of(compiled.source_of(compiled_state)); }
  std::vector<StateId> compiled_inputs(std::span<const StateId> source_inputs) const;
  std::vector<StateId> source_states(std::span<const StateId> compiled_states) const;
};

Pipeline build_pipeline(const MultiLetterProtocol& p, const MultiLetterCompileOptions& lower = {},
                        const SynchronizerOptions& sync = {});

/// run_async on the compiled protocol from source inputs. Uses per-choice keying unless
/// the options set a custom key function.
RunResult run_pipeline(const Pipeline& pl, const NetworkGraph& g, std::span<const StateId> source_inputs,
                       const AdversaryPolicy& adv, std::uint64_t rng_seed, RunOptions opts = {});

/// Source state of every node after each simulated round of a full compiled-run trace;
/// row r holds the nodes that completed round r (shorter rows are padded with kNoLetter).
std::vector<std::vector<StateId>> simulated_history(const Pipeline& pl, const ExecutionTrace& t);

struct EquivalenceCase {
  std::uint64_t seed = 0;
  bool identical = false;
  double sync_rounds = 0;
  double async_run_time = 0;
  /// async_run_time / sync_rounds; 0 when the reference run takes no round.
  double overhead = 0;
  std::uint64_t async_events = 0;
  /// First round after which some node's simulated state differs, when known.
  std::optional<std::uint64_t> diverging_round;
  std::string message;
};

struct EquivalenceReport {
  std::vector<EquivalenceCase> cases;
  std::size_t identical = 0;
  double median_overhead = 0;

  bool all_identical() const { return identical == cases.size(); }
};

struct EquivalenceOptions {
  /// Full traces are recorded to locate the diverging round only when the reference run
  /// has at most this many node steps.
  std::uint64_t diagnose_limit = 2'000'000;
  std::uint64_t max_events = 400'000'000;
};

/// Reference run_sync of the source against run_async of the pipeline with the same
/// seed and per-choice keying; compares per-node output states.
EquivalenceCase run_equivalence(const Pipeline& pl, const NetworkGraph& g, std::span<const StateId> inputs,
                                const AdversaryPolicy& adv, std::uint64_t seed, const EquivalenceOptions& opts = {});

EquivalenceReport equivalence_harness(const Pipeline& pl, const NetworkGraph& g, std::span<const StateId> inputs,
                                      const AdversaryPolicy& adv, std::span<const std::uint64_t> seeds,
                                      const EquivalenceOptions& opts = {});

}  // namespace nfsm
