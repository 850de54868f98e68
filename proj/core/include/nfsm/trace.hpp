#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nfsm/adversary.hpp"
#include "nfsm/graph.hpp"
#include "nfsm/multi_letter.hpp"
#include "nfsm/protocol.hpp"

namespace nfsm {

enum class EventKind : std::uint8_t { kStepEnd = 0, kDelivery = 1, kOutputConfig = 2 };

/// One trace record. Field use by kind:
///   StepEnd:  node, step t, before, after, letter transmitted (or eps), observed, value = L(v,t)
///   Delivery: node = receiver, peer = sender, step = sender's step, letter, value = D(peer,t,node)
///   OutputConfig: time only
/// `observed` is the count index c.index(b) of lambda(before) for single-letter runs, and
/// the row into ExecutionTrace::observed_vectors for multi-letter runs.
struct TraceEvent {
  EventKind kind = EventKind::kStepEnd;
  double time = 0;
  NodeId node = 0;
  NodeId peer = 0;
  std::uint64_t step = 0;
  StateId before = 0;
  StateId after = 0;
  LetterId letter = kEpsilon;
  std::uint32_t observed = 0;
  double value = 0;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

enum class TraceMode { kHashOnly, kFull };

struct ExecutionTrace {
  TraceMode mode = TraceMode::kHashOnly;
  bool multi_letter = false;
  std::size_t num_nodes = 0;
  std::size_t num_letters = 0;
  std::uint32_t bound = 1;
  LetterId initial_letter = kNoLetter;
  std::vector<StateId> initial_states;
  std::vector<TraceEvent> events;
  /// Count-index vectors observed by multi-letter steps, num_letters entries per row.
  std::vector<std::uint8_t> observed_vectors;
  /// Running hash over every event, maintained in both modes.
  std::uint64_t hash = 0;
  std::uint64_t num_events = 0;

  std::span<const std::uint8_t> observed_vector(std::uint32_t row) const {
    return {observed_vectors.data() + static_cast<std::size_t>(row) * num_letters, num_letters};
  }
};

/// Order-sensitive hash of an event stream.
class TraceHasher {
 public:
  void update(const TraceEvent& e);
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0x6e66736d2d747263ULL;
};

std::string hash_hex(std::uint64_t hash);

/// Text export: a header line `nfsm-trace 1 <nodes> <letters> <bound> <initial> <multi>`,
/// an `init` line with the initial states, then one event per line:
///   S <time> <node> <step> <before> <after> <letter> <observed> <value>
///   D <time> <to> <from> <sender-step> <letter> <value>
///   O <time>
/// Letters are ids, `-` for eps; reals use 17 significant digits. Multi-letter runs add
/// `V <row> <c...>` lines carrying observed vectors.
void write_trace_text(std::ostream& out, const ExecutionTrace& t);
ExecutionTrace read_trace_text(std::istream& in);

/// Binary export: magic "NFSMTRC1", then little-endian fixed-width fields.
void write_trace_binary(std::ostream& out, const ExecutionTrace& t);
ExecutionTrace read_trace_binary(std::istream& in);

void save_trace(const std::filesystem::path& path, const ExecutionTrace& t, bool binary);
ExecutionTrace load_trace(const std::filesystem::path& path);

/// The realized L and D values of a full trace as a replay schedule.
ReplayAdversary extract_schedule(const ExecutionTrace& t);

/// Time monotonicity, per-link FIFO, and that every delivery matches exactly one earlier
/// transmission of that letter over an existing link.
std::vector<std::string> check_trace_wellformed(const ExecutionTrace& t, const NetworkGraph& g);
/// Additionally checks every recorded read against the port contents replayed from the
/// deliveries (last delivered letter, sigma_0 before any delivery).
std::vector<std::string> check_trace_wellformed(const ExecutionTrace& t, const NetworkGraph& g, const Protocol& p);
std::vector<std::string> check_trace_wellformed(const ExecutionTrace& t, const NetworkGraph& g,
                                                const MultiLetterProtocol& p);

/// Once a node is in an output state it never leaves Q_O.
/// Per-node state after every round of a full run_sync trace (row 0 = initial states).
std::vector<std::vector<StateId>> state_history(const ExecutionTrace& t);

std::vector<std::string> check_outputs_stay(const ExecutionTrace& t, const std::function<bool(StateId)>& is_output);

}  // namespace nfsm
