#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nfsm/graph.hpp"
#include "nfsm/protocol.hpp"
#include "nfsm/trace.hpp"

namespace nfsm {

enum class Feature : std::uint8_t { kPausing, kSimulating };

/// Where a state of the synchronized protocol came from. Source state q and the letter
/// its node last put into its neighbors' ports (the carried letter) identify a carrier.
struct SyncStateAnnotation {
  StateId source = 0;
  LetterId carried = 0;
  Feature feature = Feature::kPausing;
  std::uint8_t trit = 0;
  /// 0 for pausing, 1..3 for the three counting passes.
  std::uint8_t pass = 0;
  /// Position within the pausing order or within the pass.
  std::uint32_t index = 0;
  std::uint8_t acc = 0;
  std::uint8_t phi1 = 0;
  std::uint8_t phi2 = 0;
};

/// Compiled letter (prev, cur, trit): `prev` is the port content the sender held before
/// the round, `cur` what it transmitted in the round (kEpsilon for eps).
struct SyncLetterAnnotation {
  LetterId prev = kEpsilon;
  LetterId cur = kEpsilon;
  std::uint8_t trit = 0;
};

struct CompiledProtocol {
  Protocol protocol;
  std::vector<SyncStateAnnotation> states;
  std::vector<SyncLetterAnnotation> letters;
  std::size_t source_states = 0;
  std::size_t source_letters = 0;
  std::uint32_t bound = 1;
  std::size_t carriers = 0;
  /// Compiled input state per source state; kNoLetter where the source state is not an input.
  std::vector<StateId> inputs;

  StateId compiled_input(StateId source) const;
  StateId source_of(StateId q) const { return states[q].source; }
  /// Id of the compiled letter (prev, cur, trit); kEpsilon components stand for eps.
  LetterId letter_id(LetterId prev, LetterId cur, std::uint32_t trit) const;
  /// carriers * (|Sigma|^2 + |Sigma| * b), the size the table is measured against.
  std::size_t size_reference() const;
};

struct SynchronizerOptions {
  std::size_t max_letters = 64;
  std::size_t max_states = 8'000'000;
};

/// Builds the asynchronous simulation of a protocol designed for a locally synchronous
/// environment: pausing until no neighbor port holds a letter two rounds old, three
/// counting passes over the previous-round and current-round letters of the queried
/// letter, a restart whenever the first and third pass disagree, and one transmission
/// at the end of every simulated round.
CompiledProtocol compile_synchronizer(const Protocol& p, const SynchronizerOptions& opts = {});

/// Sidecar format, one record per line:
///   state <id> <source> <carried> <pausing|simulating> <trit> <pass> <index> <acc> <phi1> <phi2>
///   letter <id> <prev|-> <cur|-> <trit>
/// preceded by `sync <source-states> <source-letters> <bound> <carriers>` and one
/// `input <source> <compiled>` line per input state.
void write_annotations(std::ostream& out, const CompiledProtocol& cp);
CompiledProtocol read_annotations(std::istream& in, Protocol protocol);

struct SyncCheckReport {
  std::vector<std::string> violations;
  std::uint64_t violation_count = 0;
  std::uint32_t max_restarts = 0;
  std::uint64_t phases = 0;
  std::uint64_t pausing_checks = 0;
  /// Simulated rounds completed per node at the end of the trace.
  std::vector<std::uint64_t> rounds;

  bool ok() const { return violation_count == 0; }
};

/// Replays a full async trace of a compiled protocol. Checks after every event that
/// adjacent nodes are at most one simulated round apart, that a node finishing the
/// pausing feature of round t holds round t-1 or round t messages from every neighbor
/// (and again when it finishes round t), and that no round restarts its counting more
/// than b times.
SyncCheckReport check_S1_S2(const ExecutionTrace& t, const CompiledProtocol& cp, const NetworkGraph& g);

}  // namespace nfsm
