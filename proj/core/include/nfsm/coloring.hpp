#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nfsm/graph.hpp"
#include "nfsm/multi_letter.hpp"
#include "nfsm/trace.hpp"
#include "nfsm/verdict.hpp"

namespace nfsm {

/// Letters of the tree coloring protocol.
enum class ColoringLetter : LetterId {
  kActive = 0,
  kWaiting,
  kDeg0,
  kDeg1,
  kDeg2,
  kDeg3Plus,
  kPropose1,
  kPropose2,
  kPropose3,
  kColor1,
  kColor2,
  kColor3,
};

inline constexpr std::size_t kColoringLetters = 12;
constexpr LetterId coloring_letter(ColoringLetter l) { return static_cast<LetterId>(l); }

enum class ColoringModeKind : std::uint8_t { kActive, kWaiting, kColored };

struct ColoringMode {
  ColoringModeKind kind = ColoringModeKind::kActive;
  /// 1..3 for Colored, 0 otherwise.
  std::uint8_t color = 0;
  /// Round within the phase (1..4) whose step the node takes next; 0 for Colored.
  std::uint8_t round = 0;
  /// Waiting only: bit c-1 set when color_c was in the ports at the wait start.
  std::uint8_t snapshot = 0;
};

/// Layout of the state space built by build_coloring_protocol.
struct ColoringLayout {
  static constexpr StateId kRound1 = 0;
  static constexpr StateId kRound2 = 1;
  /// Round 3 entered with f_3(d) = d, d in 0..3.
  static constexpr StateId kRound3 = 2;
  /// Round 4 without a proposal.
  static constexpr StateId kIdle = 6;
  /// Round 4 after proposing color c, c in 1..3.
  static constexpr StateId kProposed = 7;
  static constexpr StateId kColored = 10;
  /// Waiting states: kWaitingBase + 4 * snapshot + (round - 1).
  static constexpr StateId kWaitingBase = 13;
  static constexpr std::size_t kStates = kWaitingBase + 8 * 4;

  static constexpr StateId round3(std::uint32_t d) { return kRound3 + d; }
  static constexpr StateId proposed(std::uint32_t c) { return kProposed + c - 1; }
  static constexpr StateId colored(std::uint32_t c) { return kColored + c - 1; }
  static constexpr StateId waiting(std::uint32_t snapshot, std::uint32_t round) {
    return kWaitingBase + 4 * snapshot + (round - 1);
  }
};

ColoringMode coloring_mode(StateId q);

/// Sigma as in ColoringLetter, sigma_0 = Active, b = 3. Phases of 4 rounds: round 1
/// announces Active, round 2 the bounded degree among Active neighbors, rounds 3-4 run
/// the proposal/confirmation step for eligible nodes. A leaf whose neighbor has higher
/// degree waits, remembering which colors its ports held, until some color count exceeds
/// that snapshot; a Waiting node has at most one colored neighbor when it starts waiting,
/// so a count of 2 for a remembered color is new. Q_O = Colored(1..3), which is absorbing.
MultiLetterProtocol build_coloring_protocol();

class NotATree : public Error {
 public:
  using Error::Error;
};

/// No monochromatic edge; colors must be in 1..3. Throws NotATree unless g is a tree.
Verdict verify_coloring(const NetworkGraph& g, std::span<const std::uint8_t> colors);
/// Same check on protocol states; any non-Colored state fails.
Verdict verify_coloring_states(const NetworkGraph& g, std::span<const StateId> states);

struct WaitEvent {
  NodeId node = 0;
  NodeId target = 0;
  /// Phase (1-based) in which the node moved to Waiting.
  std::uint32_t phase = 0;
};

struct ColoringPhase {
  /// V^i: nodes taking part in round 2 of the phase.
  std::vector<bool> active;
  /// The restriction of V^i to nodes that never waited.
  std::vector<bool> never_waited;
  /// d^i(v) among V^i.
  std::vector<std::uint32_t> degree;
  /// |C(v)| at the phase start.
  std::vector<std::uint8_t> palette;
  std::size_t num_active = 0;
};

struct PhaseView {
  std::vector<ColoringPhase> phases;
  std::vector<WaitEvent> waits;
  /// Phase (1-based) in which each node became Colored, 0 if never.
  std::vector<std::uint32_t> colored_in;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

/// Splits a full run_sync trace of the coloring protocol into phases.
PhaseView analyze_phases(const ExecutionTrace& t, const NetworkGraph& g);

/// |C(v)| >= min{d^i(v) + 1, 3} for every v in V^i.
std::vector<std::string> check_palettes(const PhaseView& view);
/// Wait targets were Active up to the wait and are Active or Colored in the next phase;
/// a Waiting neighbor of an Active node waits on it; the relation is acyclic; a waiting
/// node is back, with degree 0, exactly in the phase after its target got colored.
std::vector<std::string> check_waiting_hierarchy(const PhaseView& view, const NetworkGraph& g);

struct GoodNodeSample {
  std::uint32_t phase = 0;
  std::size_t tree_size = 0;
  std::size_t good = 0;
};

/// A node of a tree is good when it has degree <= 1, or degree 2 with both neighbors of
/// degree <= 2. Counts, per phase, every tree of the forest induced by the never-waited
/// Active nodes.
std::vector<GoodNodeSample> good_node_samples(const PhaseView& view, const NetworkGraph& g);
/// Good nodes of a single tree, or of every tree of a forest given as a node mask.
std::vector<GoodNodeSample> good_node_samples(const NetworkGraph& g, const std::vector<bool>& mask);

}  // namespace nfsm
