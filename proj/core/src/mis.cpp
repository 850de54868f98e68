#include "nfsm/mis.hpp"

#include <algorithm>
#include <sstream>

#include "nfsm/stats.hpp"

namespace nfsm {
namespace {

constexpr StateId kWin = mis_id(MisState::kWin);
constexpr StateId kLose = mis_id(MisState::kLose);
constexpr StateId kDown1 = mis_id(MisState::kDown1);
constexpr StateId kDown2 = mis_id(MisState::kDown2);
constexpr StateId kUp0 = mis_id(MisState::kUp0);

StateId up(std::uint32_t j) { return kUp0 + j % 3; }

bool any_of(const CountView& c, std::initializer_list<StateId> letters) {
  for (StateId l : letters)
    if (c.present(l)) return true;
  return false;
}

}  // namespace

const char* mis_name(MisState s) {
  static constexpr const char* names[] = {"Win", "Lose", "Down1", "Down2", "Up0", "Up1", "Up2"};
  return names[static_cast<StateId>(s)];
}

MultiLetterProtocol build_mis_protocol() {
  NameTable letters;
  for (StateId q = 0; q < kMisStates; ++q) letters.add(mis_name(static_cast<MisState>(q)));

  std::vector<MultiLetterState> states(kMisStates);
  for (StateId q = 0; q < kMisStates; ++q) states[q].name = mis_name(static_cast<MisState>(q));

  for (StateId q : {kWin, kLose}) {
    states[q].output = true;
    states[q].rules.push_back({"absorbing", [](const CountView&) { return true; }, {{q, kEpsilon}}});
  }

  auto& down1 = states[kDown1];
  down1.input = true;
  down1.observed = {kDown2};
  down1.rules = {
      {"delayed", [](const CountView& c) { return c.present(kDown2); }, {{kDown1, kEpsilon}}},
      {"advance", [](const CountView& c) { return c.zero(kDown2); }, {{kUp0, kUp0}}},
  };

  auto& down2 = states[kDown2];
  down2.observed = {kWin, kUp0, up(1), up(2)};
  auto down2_delayed = [](const CountView& c) { return any_of(c, {kUp0, up(1), up(2)}); };
  down2.rules = {
      {"delayed", down2_delayed, {{kDown2, kEpsilon}}},
      {"lose", [=](const CountView& c) { return !down2_delayed(c) && c.present(kWin); }, {{kLose, kLose}}},
      {"retry", [=](const CountView& c) { return !down2_delayed(c) && c.zero(kWin); }, {{kDown1, kDown1}}},
  };

  for (std::uint32_t j = 0; j < 3; ++j) {
    const StateId self = up(j);
    const StateId next = up(j + 1);
    const StateId prev = up(j + 2);
    auto& s = states[self];
    s.observed = {prev, self, next};
    if (j == 0) s.observed.push_back(kDown1);
    const bool by_down1 = j == 0;
    auto delayed = [=](const CountView& c) { return c.present(prev) || (by_down1 && c.present(kDown1)); };
    s.rules = {
        {"delayed", delayed, {{self, kEpsilon}}},
        {"head", [=](const CountView& c) { return !delayed(c); }, {{next, next}}},
        {"tail-win",
         [=](const CountView& c) { return !delayed(c) && c.zero(self) && c.zero(next); },
         {{kWin, kWin}}},
        {"tail-down",
         [=](const CountView& c) { return !delayed(c) && (c.present(self) || c.present(next)); },
         {{kDown2, kDown2}}},
    };
  }

  return MultiLetterProtocol(std::move(letters), kDown1, 1, std::move(states));
}

Verdict verify_mis(const NetworkGraph& g, const std::vector<bool>& out) {
  if (out.size() != g.num_nodes()) return Verdict::fail("output assignment has the wrong size", {});
  for (const auto& [u, v] : g.edges()) {
    if (out[u] && out[v]) {
      return Verdict::fail("independence violated on edge (" + std::to_string(u) + ", " + std::to_string(v) + ")",
                           {u, v});
    }
  }
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (out[v]) continue;
    auto nb = g.neighbors(v);
    if (std::none_of(nb.begin(), nb.end(), [&](NodeId u) { return out[u]; })) {
      return Verdict::fail("maximality violated at node " + std::to_string(v), {v});
    }
  }
  return Verdict::pass();
}

Verdict verify_mis_states(const NetworkGraph& g, std::span<const StateId> states) {
  std::vector<bool> out(states.size());
  for (NodeId v = 0; v < states.size(); ++v) {
    if (states[v] != kWin && states[v] != kLose) {
      return Verdict::fail("node " + std::to_string(v) + " is not in an output state", {v});
    }
    out[v] = states[v] == kWin;
  }
  return verify_mis(g, out);
}

std::size_t TournamentView::max_tournaments() const {
  std::size_t m = 0;
  for (const auto& v : nodes) m = std::max(m, v.tournaments.size());
  return m;
}

TournamentView analyze_tournaments(const ExecutionTrace& t) {
  TournamentView view;
  if (t.mode != TraceMode::kFull) {
    view.errors.push_back("trace was recorded without events");
    return view;
  }
  const auto rows = state_history(t);
  view.configurations = rows.size();
  view.nodes.resize(t.num_nodes);
  for (NodeId v = 0; v < t.num_nodes; ++v) {
    auto& nt = view.nodes[v];
    auto error = [&](const std::string& what) { view.errors.push_back("node " + std::to_string(v) + ": " + what); };
    std::uint64_t tau = 0;
    for (; tau < rows.size() && mis_active(rows[tau][v]); ++tau) {
      const StateId q = rows[tau][v];
      if (!nt.turns.empty() && nt.turns.back().state == q && nt.turns.back().end + 1 == tau) {
        nt.turns.back().end = tau;
      } else {
        nt.turns.push_back({q, tau, tau});
      }
    }
    nt.finished = tau;
    if (tau == rows.size()) {
      error("still active at the end of the trace");
      continue;
    }
    if (nt.turns.empty()) continue;
    if (nt.turns.front().state != kDown1) error("first turn is not a Down1-turn");
    for (std::size_t k = 0; k < nt.turns.size(); ++k) {
      if (nt.turns[k].state == kDown1 || nt.tournaments.empty()) {
        nt.tournaments.push_back({k, 0, 0, false, 0, 0});
      }
      auto& tour = nt.tournaments.back();
      ++tour.num_turns;
      if (mis_up(nt.turns[k].state)) ++tour.up_turns;
      nt.turn_tournament.push_back(static_cast<std::uint32_t>(nt.tournaments.size() - 1));
      nt.turn_index.push_back(static_cast<std::uint32_t>(tour.num_turns));
    }
    for (std::size_t i = 0; i < nt.tournaments.size(); ++i) {
      auto& tour = nt.tournaments[i];
      const StateId closing = nt.turns[tour.first_turn + tour.num_turns - 1].state;
      tour.length = static_cast<std::uint32_t>(tour.num_turns);
      if (tour.up_turns == 0) error("tournament " + std::to_string(i + 1) + " has no Up-turn");
      if (i + 1 < nt.tournaments.size()) {
        if (closing != kDown2) error("tournament " + std::to_string(i + 1) + " does not end with a Down2-turn");
        continue;
      }
      tour.last = true;
      tour.outcome = rows[tau][v];
      if (mis_up(closing)) {
        if (tour.outcome != kWin) error("leaves an Up-turn into Lose");
        ++tour.length;
      } else if (closing == kDown2) {
        if (tour.outcome != kLose) error("leaves a Down2-turn into Win");
      } else {
        error("last tournament ends with a Down1-turn");
      }
    }
  }
  return view;
}

std::uint64_t turn_time(const NodeTournaments& v, std::size_t tournament, std::uint32_t turn) {
  for (std::size_t k = 0; k < v.turns.size(); ++k) {
    const std::uint32_t i = v.turn_tournament[k];
    if (i > tournament ||
        (i == tournament && (v.turns[k].state == kDown2 || v.turn_index[k] >= turn))) {
      return v.turns[k].start;
    }
  }
  return v.finished;
}

std::vector<std::string> check_turn_progress(const TournamentView& view, const NetworkGraph& g) {
  std::vector<std::string> violations;
  const std::size_t n = view.nodes.size();
  const std::size_t tournaments = view.max_tournaments();
  for (std::size_t i = 0; i < tournaments; ++i) {
    std::uint32_t max_turns = 0;
    for (const auto& v : view.nodes) {
      if (i < v.tournaments.size()) max_turns = std::max<std::uint32_t>(max_turns, v.tournaments[i].num_turns);
    }
    // times[j][v] = T_v(i, j) for j = 1 .. max_turns + 1.
    std::vector<std::vector<std::uint64_t>> times(max_turns + 2, std::vector<std::uint64_t>(n));
    for (std::uint32_t j = 1; j <= max_turns + 1; ++j) {
      for (NodeId v = 0; v < n; ++v) times[j][v] = turn_time(view.nodes[v], i, j);
    }
    for (std::uint32_t j = 1; j <= max_turns; ++j) {
      for (NodeId v = 0; v < n; ++v) {
        std::uint64_t bound = times[j][v];
        for (NodeId u : g.neighbors(v)) bound = std::max(bound, times[j][u]);
        if (times[j + 1][v] > bound + 1) {
          std::ostringstream msg;
          msg << "node " << v << ": T(" << i + 1 << ", " << j + 1 << ") = " << times[j + 1][v]
              << " exceeds the neighborhood's T(" << i + 1 << ", " << j << ") + 1 = " << bound + 1;
          violations.push_back(msg.str());
        }
      }
    }
  }
  return violations;
}

std::vector<std::string> check_neighbor_turns(const TournamentView& view, const NetworkGraph& g) {
  std::vector<std::string> violations;
  const std::size_t n = view.nodes.size();
  std::vector<std::size_t> cursor(n, 0);
  struct Position {
    bool active;
    std::uint32_t tournament;
    std::uint32_t turn;
    StateId state;
  };
  std::vector<Position> pos(n);
  for (std::uint64_t tau = 0; tau < view.configurations; ++tau) {
    for (NodeId v = 0; v < n; ++v) {
      const auto& nt = view.nodes[v];
      while (cursor[v] < nt.turns.size() && nt.turns[cursor[v]].end < tau) ++cursor[v];
      const std::size_t k = cursor[v];
      if (k < nt.turns.size() && nt.turns[k].start <= tau) {
        pos[v] = {true, nt.turn_tournament[k], nt.turn_index[k], nt.turns[k].state};
      } else {
        pos[v] = {false, 0, 0, 0};
      }
    }
    for (NodeId v = 0; v < n; ++v) {
      const Position& a = pos[v];
      if (!a.active) continue;
      for (NodeId u : g.neighbors(v)) {
        const Position& b = pos[u];
        if (!b.active) continue;
        bool ok = false;
        if (a.state == kDown1) {
          ok = (b.tournament + 1 == a.tournament && b.state == kDown2) ||
               (b.tournament == a.tournament && (b.turn == 1 || b.turn == 2));
        } else if (mis_up(a.state)) {
          ok = b.tournament == a.tournament &&
               ((b.turn + 1 >= a.turn && b.turn <= a.turn + 1) || (b.state == kDown2 && b.turn <= a.turn + 1));
        } else {
          ok = (b.tournament == a.tournament && mis_up(b.state) && b.turn + 1 >= a.turn) ||
               (b.tournament == a.tournament && b.state == kDown2) ||
               (b.tournament == a.tournament + 1 && b.turn == 1);
        }
        if (!ok) {
          std::ostringstream msg;
          msg << "configuration " << tau << ": node " << v << " in turn " << a.turn << " of tournament "
              << a.tournament + 1 << " next to node " << u << " in turn " << b.turn << " of tournament "
              << b.tournament + 1;
          violations.push_back(msg.str());
        }
      }
    }
  }
  return violations;
}

std::vector<std::string> check_win_lose(const TournamentView& view, const NetworkGraph& g) {
  std::vector<std::string> violations;
  for (NodeId v = 0; v < view.nodes.size(); ++v) {
    const auto& tv = view.nodes[v].tournaments;
    if (tv.empty() || tv.back().outcome != kWin) continue;
    const std::size_t i = tv.size();
    for (NodeId u : g.neighbors(v)) {
      const auto& tu = view.nodes[u].tournaments;
      if (tu.size() < i) continue;
      if (tu.size() != i || tu.back().outcome != kLose) {
        violations.push_back("node " + std::to_string(v) + " wins tournament " + std::to_string(i) + " but neighbor " +
                             std::to_string(u) + " does not lose at the end of its tournament " + std::to_string(i));
      }
    }
  }
  return violations;
}

std::vector<std::uint64_t> edge_series(const TournamentView& view, const NetworkGraph& g) {
  std::vector<std::uint64_t> series;
  const auto edges = g.edges();
  for (std::size_t i = 1;; ++i) {
    std::uint64_t count = 0;
    for (const auto& [u, v] : edges) {
      count += (view.nodes[u].tournaments.size() >= i && view.nodes[v].tournaments.size() >= i) ? 1 : 0;
    }
    series.push_back(count);
    if (count == 0) break;
  }
  return series;
}

std::vector<DecayRatio> edge_decay_stats(std::span<const std::vector<std::uint64_t>> series, double confidence,
                                         std::size_t min_runs, std::uint64_t min_edges) {
  std::vector<const std::vector<std::uint64_t>*> usable;
  for (const auto& s : series) {
    if (!s.empty() && s[0] >= min_edges) usable.push_back(&s);
  }
  if (usable.size() < min_runs) {
    throw InsufficientSamples("edge decay needs " + std::to_string(min_runs) + " runs with at least " +
                              std::to_string(min_edges) + " edges, got " + std::to_string(usable.size()));
  }
  std::vector<DecayRatio> out;
  for (std::size_t i = 0;; ++i) {
    std::vector<double> ratios;
    for (const auto* s : usable) {
      if (i + 1 < s->size() && (*s)[i] > 0) {
        ratios.push_back(static_cast<double>((*s)[i + 1]) / static_cast<double>((*s)[i]));
      }
    }
    if (ratios.size() < 2) break;
    DecayRatio r;
    r.tournament = i + 1;
    r.samples = ratios.size();
    r.mean = mean(ratios);
    r.stddev = stddev(ratios);
    r.upper = upper_confidence_bound(ratios, confidence);
    out.push_back(r);
  }
  return out;
}

}  // namespace nfsm
