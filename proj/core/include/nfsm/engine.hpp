#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nfsm/adversary.hpp"
#include "nfsm/graph.hpp"
#include "nfsm/multi_letter.hpp"
#include "nfsm/protocol.hpp"
#include "nfsm/trace.hpp"

namespace nfsm {

class CapExceeded : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Coordinates of one random draw: the word is draw_word(rng_seed, stream, index).
struct DrawKey {
  std::uint64_t stream = 0;
  std::uint64_t index = 0;
};

enum class ChoiceKeying {
  /// stream = node, index = the node's step (async) or round (sync).
  kPerStep,
  /// stream = node, index = how many multi-outcome choices the node made before. Lets a
  /// compiled run, which inserts only deterministic steps, consume the reference run's draws.
  kPerChoice,
};

/// Custom keying, invoked on every step with (node, step, state before the step).
using ChoiceKeyFn = std::function<DrawKey(NodeId, std::uint64_t, StateId)>;

struct RunOptions {
  std::uint64_t max_events = 100'000'000;
  TraceMode trace = TraceMode::kHashOnly;
  ChoiceKeying keying = ChoiceKeying::kPerStep;
  ChoiceKeyFn key_fn;
  /// Keep simulating after the first output configuration until max_events; the clock
  /// and the report still refer to the first output configuration.
  bool continue_after_output = false;
  /// Without an output configuration within max_events: throw CapExceeded, or return
  /// with report.reached_output = false.
  bool throw_on_cap = true;
};

struct RunTimeReport {
  bool reached_output = false;
  double output_time = 0;
  /// Largest L and D realized up to the output time (or the stop time when unreached).
  double time_unit = 0;
  /// output_time / time_unit; 0 when no step happened.
  double run_time = 0;
  std::uint64_t events = 0;
  /// Steps (rounds for sync runs) completed per node at the output time.
  std::vector<std::uint64_t> steps;
  std::uint64_t max_steps() const;
};

struct RunResult {
  ExecutionTrace trace;
  RunTimeReport report;
  /// Node states at the first output configuration; empty if none was reached.
  std::vector<StateId> output_states;
  /// Node states when the run stopped.
  std::vector<StateId> final_states;
};

/// Discrete-event execution under an oblivious adversary. Events are totally ordered by
/// (time, node, deliveries before step ends, insertion order).
RunResult run_async(const Protocol& p, const NetworkGraph& g, std::span<const StateId> inputs,
                    const AdversaryPolicy& adv, std::uint64_t rng_seed, const RunOptions& opts = {});

/// Lock-step rounds: in round r every node reads the ports holding all transmissions of
/// rounds < r. Time advances by 1 per round.
RunResult run_sync(const MultiLetterProtocol& p, const NetworkGraph& g, std::span<const StateId> inputs,
                   std::uint64_t rng_seed, const RunOptions& opts = {});
RunResult run_sync(const Protocol& p, const NetworkGraph& g, std::span<const StateId> inputs,
                   std::uint64_t rng_seed, const RunOptions& opts = {});

/// Every node starts in `q`.
inline std::vector<StateId> uniform_inputs(const NetworkGraph& g, StateId q) {
  return std::vector<StateId>(g.num_nodes(), q);
}

}  // namespace nfsm
