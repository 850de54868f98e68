#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nfsm/engine.hpp"
#include "nfsm/multi_letter.hpp"
#include "nfsm/trace.hpp"

namespace nfsm {

using SymbolId = std::uint32_t;
using TmStateId = std::uint32_t;

enum class Move : std::uint8_t { kLeft, kRight };
enum class TmVerdict : std::uint8_t { kAccept, kReject };

struct TmTransition {
  TmStateId next = 0;
  SymbolId write = 0;
  Move move = Move::kRight;

  friend bool operator==(const TmTransition&, const TmTransition&) = default;
};

class InvalidMachine : public Error {
 public:
  using Error::Error;
};

/// A randomized LBA. delta(p, g) lists the candidate transitions, one of which is taken
/// uniformly at random; halting states have none. With end markers declared, every tape
/// must start with the left and end with the right marker, the head never moves past
/// them and they are never overwritten or written elsewhere.
struct TuringMachineSpec {
  std::vector<std::string> alphabet;
  std::vector<std::string> states;
  TmStateId initial = 0;
  std::vector<bool> accept;
  std::vector<bool> reject;
  std::optional<SymbolId> left_marker;
  std::optional<SymbolId> right_marker;
  /// Indexed by p * |alphabet| + g.
  std::vector<std::vector<TmTransition>> delta;

  std::size_t num_symbols() const { return alphabet.size(); }
  std::size_t num_states() const { return states.size(); }
  bool halting(TmStateId p) const { return accept[p] || reject[p]; }
  const std::vector<TmTransition>& transitions(TmStateId p, SymbolId g) const { return delta[p * alphabet.size() + g]; }
  std::vector<TmTransition>& transitions(TmStateId p, SymbolId g) { return delta[p * alphabet.size() + g]; }

  std::optional<SymbolId> find_symbol(std::string_view name) const;
  std::optional<TmStateId> find_state(std::string_view name) const;

  /// Symbols of `word`, one character per symbol, wrapped in the end markers when the
  /// machine declares them.
  std::vector<SymbolId> tape_for(std::string_view word) const;
  /// Inverse of tape_for: drops the markers and concatenates symbol names.
  std::string word_of(const std::vector<SymbolId>& tape) const;
};

// Text format, '#' starts a comment:
//
//   alphabet <symbol>...
//   markers <left> <right>        (optional)
//   states <state>...
//   initial <state>
//   accept <state>...
//   reject <state>...
//   delta <state> <symbol> -> <state> <symbol> <L|R>
//
// Repeated delta lines for the same (state, symbol) add alternatives.
TuringMachineSpec read_tm(std::istream& in);
TuringMachineSpec load_tm(const std::filesystem::path& path);
void write_tm(std::ostream& out, const TuringMachineSpec& tm);

/// Totality on non-halting pairs, no transitions out of halting states, halting sets
/// disjoint, and boundary safety. A machine without markers may not move at all, which
/// leaves only machines halting at once.
ValidationReport validate_tm(const TuringMachineSpec& tm);

struct TmStep {
  std::uint32_t head = 0;
  TmStateId state = 0;
  SymbolId read = 0;
  TmTransition taken;
};

struct TmRun {
  TmVerdict verdict = TmVerdict::kReject;
  std::vector<SymbolId> tape;
  std::uint32_t head = 0;
  std::uint64_t steps = 0;
  std::vector<TmStep> history;
};

class StepCapExceeded : public Error {
 public:
  using Error::Error;
};

/// The k-th step (0-based) of a run draws its choice from draw_word(seed, 0, k).
inline constexpr std::uint64_t kTmChoiceStream = 0;

/// Direct interpretation with the head on cell 0.
TmRun run_tm_oracle(const TuringMachineSpec& tm, const std::vector<SymbolId>& tape, std::uint64_t seed,
                    std::uint64_t max_steps = 10'000'000);

enum class RlbaNodeKind : std::uint8_t {
  /// Not holding the head; `dir` says on which side the head is.
  kIdle,
  /// Just handed the head on; ignores movement letters for this and the next round.
  kHandoff,
  kCooldown,
  /// Holding the head in TM state `p`.
  kHead,
  kHalted,
};

struct RlbaNodeState {
  RlbaNodeKind kind = RlbaNodeKind::kIdle;
  SymbolId symbol = 0;
  Move dir = Move::kLeft;
  TmStateId p = 0;
  TmVerdict verdict = TmVerdict::kReject;
};

/// A path protocol simulating the machine, one node per tape cell. Letters are (move, p)
/// plus one halt letter per verdict; sigma_0 = (L, p_0), b = 1. Node i starts holding
/// gamma_i; node 0 holds the head in p_0, every other node has the head on its left.
struct RlbaCompilation {
  TuringMachineSpec tm;
  MultiLetterProtocol protocol;
  std::vector<RlbaNodeState> state_info;

  StateId idle(SymbolId g, Move dir) const;
  StateId head(SymbolId g, TmStateId p) const;
  StateId halted(SymbolId g, TmVerdict v) const;
  LetterId move_letter(Move m, TmStateId p) const;
  LetterId halt_letter(TmVerdict v) const;

  std::vector<StateId> input_states(const std::vector<SymbolId>& tape) const;
  std::vector<SymbolId> tape_of(std::span<const StateId> states) const;
  /// The common verdict of an all-halted configuration.
  std::optional<TmVerdict> verdict_of(std::span<const StateId> states) const;
  /// Draw keys following the oracle: the k-th step taken in a head state uses index k.
  /// The returned function carries its own counter; use a fresh one per run.
  ChoiceKeyFn key_fn() const;
};

RlbaCompilation compile_rlba(const TuringMachineSpec& tm);

struct RlbaRun {
  std::optional<TmVerdict> verdict;
  std::vector<SymbolId> tape;
  RunResult result;
};

/// run_sync on the path with oracle-matched randomness.
RlbaRun run_compiled_rlba(const RlbaCompilation& c, const std::vector<SymbolId>& tape, std::uint64_t seed,
                          TraceMode mode = TraceMode::kHashOnly, std::uint64_t max_rounds = 100'000'000);

struct RlbaComparison {
  TmRun oracle;
  RlbaRun compiled;
  bool equal = false;
  /// Empty when equal.
  std::string difference;
};

RlbaComparison run_both(const RlbaCompilation& c, const std::vector<SymbolId>& tape, std::uint64_t seed,
                        TraceMode mode = TraceMode::kHashOnly);

/// Against the oracle run with the same seed, on a full trace: exactly one node holds or
/// is handing on the head in every configuration before the halt and none after; after
/// the k-th head step the letter components spell the oracle tape after k steps, and
/// the head step happens at the oracle's head cell in its state; every idle node away
/// from the head cell points toward it.
std::vector<std::string> check_rlba_invariants(const RlbaCompilation& c, const ExecutionTrace& t, const TmRun& oracle);

}  // namespace nfsm
