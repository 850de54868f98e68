#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nfsm/graph.hpp"
#include "nfsm/multi_letter.hpp"
#include "nfsm/trace.hpp"
#include "nfsm/verdict.hpp"

namespace nfsm {

/// State and letter ids of the MIS protocol; letters share the state numbering.
enum class MisState : StateId { kWin = 0, kLose, kDown1, kDown2, kUp0, kUp1, kUp2 };

inline constexpr std::size_t kMisStates = 7;

constexpr StateId mis_id(MisState s) { return static_cast<StateId>(s); }
const char* mis_name(MisState s);
constexpr bool mis_active(StateId q) { return q >= mis_id(MisState::kDown1); }
constexpr bool mis_up(StateId q) { return q >= mis_id(MisState::kUp0); }

/// Sigma = Q, sigma_0 = Down1, b = 1. A node stays put while a delaying letter is in its
/// ports; otherwise Down1 -> Up0, Down2 -> Lose or Down1 depending on Win, and Up_j flips
/// a coin between Up_{j+1} and Win/Down2. A node transmits its new state's name whenever
/// it moves.
MultiLetterProtocol build_mis_protocol();

/// Independence (no Win-Win edge) and maximality (each Lose node has a Win neighbor).
/// `out[v]` is true for Win.
Verdict verify_mis(const NetworkGraph& g, const std::vector<bool>& out);
/// Same check on MIS protocol states; any non-output state fails.
Verdict verify_mis_states(const NetworkGraph& g, std::span<const StateId> states);

struct Turn {
  StateId state = 0;
  /// Configuration indices [start, end]: the node resides in `state` after rounds start..end.
  std::uint64_t start = 0;
  std::uint64_t end = 0;
};

struct Tournament {
  std::size_t first_turn = 0;
  std::size_t num_turns = 0;
  std::uint32_t up_turns = 0;
  bool last = false;
  /// Win or Lose for the last tournament.
  StateId outcome = 0;
  /// Turn count, plus 1 for a last tournament missing its closing Down2-turn.
  std::uint32_t length = 0;
};

struct NodeTournaments {
  std::vector<Turn> turns;
  std::vector<Tournament> tournaments;
  /// Configuration index at which the node became inactive.
  std::uint64_t finished = 0;
  /// Per turn: tournament index (0-based) and turn index within it (1-based).
  std::vector<std::uint32_t> turn_tournament;
  std::vector<std::uint32_t> turn_index;
};

struct TournamentView {
  std::vector<NodeTournaments> nodes;
  std::uint64_t configurations = 0;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
  std::size_t max_tournaments() const;
};

/// Segments every node's round sequence into turns and tournaments.
TournamentView analyze_tournaments(const ExecutionTrace& t);

/// T_v(i, j), 0-based tournament i and 1-based turn j: the first configuration at
/// which v is inactive, past tournament i, in its Down2-turn, or in turn >= j of it.
std::uint64_t turn_time(const NodeTournaments& v, std::size_t tournament, std::uint32_t turn);

/// T_v(i, j+1) <= max over N(v) + v of T_u(i, j), plus 1.
std::vector<std::string> check_turn_progress(const TournamentView& view, const NetworkGraph& g);
/// The neighbors-turns case split at every configuration for every adjacent active pair.
std::vector<std::string> check_neighbor_turns(const TournamentView& view, const NetworkGraph& g);
/// A node winning its tournament i sends every neighbor that reached tournament i to
/// Lose at the end of that neighbor's tournament i.
std::vector<std::string> check_win_lose(const TournamentView& view, const NetworkGraph& g);

/// |E^i| for i = 1, 2, ...: edges among nodes that reach tournament i.
std::vector<std::uint64_t> edge_series(const TournamentView& view, const NetworkGraph& g);

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

struct DecayRatio {
  std::size_t tournament = 0;  // i, 1-based: the ratio |E^{i+1}| / |E^i|
  std::size_t samples = 0;
  double mean = 0;
  double stddev = 0;
  /// One-sided upper confidence bound on the mean.
  double upper = 0;
};

/// Mean of |E^{i+1}| / |E^i| over runs with |E^i| > 0. Requires at least `min_runs` series
/// whose |E^1| >= min_edges.
std::vector<DecayRatio> edge_decay_stats(std::span<const std::vector<std::uint64_t>> series, double confidence = 0.95,
                                         std::size_t min_runs = 30, std::uint64_t min_edges = 100);

}  // namespace nfsm
