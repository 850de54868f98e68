#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <tuple>

#include "nfsm/coloring.hpp"
#include "nfsm/engine.hpp"
#include "nfsm/mis.hpp"
#include "test_support.hpp"

namespace nfsm {
namespace {

using namespace nfsm::testing;

constexpr StateId kWin = mis_id(MisState::kWin);
constexpr StateId kLose = mis_id(MisState::kLose);
constexpr StateId kDown1 = mis_id(MisState::kDown1);
constexpr StateId kDown2 = mis_id(MisState::kDown2);
constexpr StateId kUp0 = mis_id(MisState::kUp0);

RunOptions full_trace() {
  RunOptions o;
  o.trace = TraceMode::kFull;
  return o;
}

/// The MIS transition table written out directly from the rules, as a set of
/// (next, letter) pairs for a presence vector over the seven letters.
std::set<std::pair<StateId, LetterId>> mis_rule(StateId q, const std::array<bool, kMisStates>& has) {
  auto up = [](std::uint32_t j) { return kUp0 + j % 3; };
  auto move = [](StateId to) { return std::pair<StateId, LetterId>{to, to}; };
  if (q == kWin || q == kLose) return {{q, kEpsilon}};
  if (q == kDown1) return has[kDown2] ? std::set<std::pair<StateId, LetterId>>{{q, kEpsilon}} : std::set{move(kUp0)};
  if (q == kDown2) {
    if (has[up(0)] || has[up(1)] || has[up(2)]) return {{q, kEpsilon}};
    return {move(has[kWin] ? kLose : kDown1)};
  }
  const std::uint32_t j = q - kUp0;
  if (has[up(j + 2)] || (j == 0 && has[kDown1])) return {{q, kEpsilon}};
  const bool quiet = !has[up(j)] && !has[up(j + 1)];
  return {move(up(j + 1)), move(quiet ? kWin : kDown2)};
}

TEST(Mis, TableMatchesRulesOnEveryVector) {
  const auto p = build_mis_protocol();
  ASSERT_EQ(p.num_states(), kMisStates);
  EXPECT_EQ(p.bound(), 1u);
  EXPECT_EQ(p.initial_letter(), kDown1);
  EXPECT_EQ(p.input_states(), std::vector<StateId>{kDown1});
  for (StateId q = 0; q < kMisStates; ++q) EXPECT_EQ(p.is_output(q), q == kWin || q == kLose);
  for (StateId q = 0; q < kMisStates; ++q) {
    for (std::uint32_t mask = 0; mask < (1u << kMisStates); ++mask) {
      std::array<bool, kMisStates> has{};
      std::vector<std::uint8_t> idx(kMisStates);
      for (std::size_t l = 0; l < kMisStates; ++l) idx[l] = has[l] = (mask >> l) & 1;
      std::set<std::pair<StateId, LetterId>> got;
      for (const auto& o : p.outcomes(q, CountView::from_indices(idx, 1))) got.insert({o.next, o.letter});
      EXPECT_EQ(got, mis_rule(q, has)) << p.state_name(q) << " mask " << mask;
    }
  }
}

/// Every configuration of the synchronous K2 system reachable under some choice
/// sequence: (state 0, state 1, letter in 0's port, letter in 1's port).
TEST(Mis, K2ReachableConfigurationsAllEndWithOneWinner) {
  using Config = std::tuple<StateId, StateId, LetterId, LetterId>;
  std::set<Config> seen;
  std::queue<Config> todo;
  todo.push({kDown1, kDown1, kDown1, kDown1});
  seen.insert(todo.front());
  std::map<Config, std::vector<Config>> succ;
  while (!todo.empty()) {
    const auto [q0, q1, p0, p1] = todo.front();
    todo.pop();
    std::array<bool, kMisStates> h0{}, h1{};
    h0[p0] = true;
    h1[p1] = true;
    for (const auto& [n0, l0] : mis_rule(q0, h0)) {
      for (const auto& [n1, l1] : mis_rule(q1, h1)) {
        const Config next{n0, n1, l1 == kEpsilon ? p0 : l1, l0 == kEpsilon ? p1 : l0};
        succ[{q0, q1, p0, p1}].push_back(next);
        if (seen.insert(next).second) todo.push(next);
      }
    }
  }
  std::size_t terminal = 0;
  for (const auto& [q0, q1, p0, p1] : seen) {
    EXPECT_FALSE(q0 == kWin && q1 == kWin);
    EXPECT_FALSE(q0 == kLose && q1 == kLose);
    const bool out0 = q0 == kWin || q0 == kLose;
    const bool out1 = q1 == kWin || q1 == kLose;
    if (out0 && out1) ++terminal;
  }
  EXPECT_GT(terminal, 0u);
  // From every reachable configuration an output configuration stays reachable, so the
  // finite chain is absorbed with probability 1.
  for (const auto& c : seen) {
    std::set<Config> reach{c};
    std::queue<Config> q;
    q.push(c);
    bool found = false;
    while (!q.empty() && !found) {
      const auto x = q.front();
      q.pop();
      const auto [a, b, p0, p1] = x;
      if ((a == kWin || a == kLose) && (b == kWin || b == kLose)) found = true;
      for (const auto& y : succ[x])
        if (reach.insert(y).second) q.push(y);
    }
    EXPECT_TRUE(found);
  }

  const auto p = build_mis_protocol();
  const auto g = path_graph(2);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto r = run_sync(p, g, uniform_inputs(g, kDown1), seed);
    EXPECT_EQ(std::count(r.output_states.begin(), r.output_states.end(), kWin), 1) << seed;
  }
}

TEST(Mis, SingleNodeAlwaysWins) {
  // Without neighbors every count is 0: the first coin either moves to the next Up
  // state or wins.
  StateId q = kDown1;
  std::set<StateId> reachable{q};
  std::queue<StateId> todo;
  todo.push(q);
  const std::array<bool, kMisStates> none{};
  while (!todo.empty()) {
    const StateId s = todo.front();
    todo.pop();
    for (const auto& [next, letter] : mis_rule(s, none))
      if (reachable.insert(next).second) todo.push(next);
  }
  EXPECT_FALSE(reachable.count(kLose));
  EXPECT_TRUE(reachable.count(kWin));
  const auto g = NetworkGraph::from_edges(1, std::vector<Edge>{});
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    EXPECT_EQ(run_sync(build_mis_protocol(), g, uniform_inputs(g, kDown1), seed).output_states[0], kWin);
}

TEST(Mis, OutputsAbsorbing) {
  const auto p = build_mis_protocol();
  for (StateId q : {kWin, kLose}) {
    for (std::uint32_t mask = 0; mask < (1u << kMisStates); ++mask) {
      std::vector<std::uint8_t> idx(kMisStates);
      for (std::size_t l = 0; l < kMisStates; ++l) idx[l] = (mask >> l) & 1;
      EXPECT_EQ(p.outcomes(q, CountView::from_indices(idx, 1)), (std::vector<Outcome>{{q, kEpsilon}}));
    }
  }
}

TEST(VerifyMis, Examples) {
  const auto star = star_graph(4);
  EXPECT_TRUE(verify_mis(star, {true, false, false, false, false}).ok);
  const auto path = path_graph(3);
  EXPECT_TRUE(verify_mis(path, {true, false, true}).ok);
  const auto k2 = path_graph(2);
  const auto none = verify_mis(k2, {false, false});
  EXPECT_FALSE(none.ok);
  ASSERT_EQ(none.witness.size(), 1u);
  EXPECT_NE(none.message.find("maximality"), std::string::npos);
  const auto both = verify_mis(k2, {true, true});
  EXPECT_FALSE(both.ok);
  EXPECT_EQ(both.witness, (std::vector<NodeId>{0, 1}));
  EXPECT_FALSE(verify_mis_states(k2, std::vector<StateId>{kWin, kDown2}).ok);
}

TEST(Tournaments, SingleNode) {
  const auto g = NetworkGraph::from_edges(1, std::vector<Edge>{});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = run_sync(build_mis_protocol(), g, uniform_inputs(g, kDown1), seed, full_trace());
    const auto view = analyze_tournaments(r.trace);
    ASSERT_TRUE(view.ok()) << view.errors.front();
    const auto& nt = view.nodes[0];
    ASSERT_EQ(nt.tournaments.size(), 1u);
    const auto& t = nt.tournaments[0];
    EXPECT_TRUE(t.last);
    EXPECT_EQ(t.outcome, kWin);
    EXPECT_EQ(nt.turns.front().state, kDown1);
    EXPECT_EQ(t.num_turns, 1 + t.up_turns);
    EXPECT_EQ(t.length, t.up_turns + 2);
  }
}

TEST(Tournaments, ObservationsHoldOnSampledRuns) {
  const auto p = build_mis_protocol();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto g = seed % 2 ? gnp_degree(48, 3, seed) : random_tree(48, seed);
    const auto r = run_sync(p, g, uniform_inputs(g, kDown1), seed, full_trace());
    const auto view = analyze_tournaments(r.trace);
    ASSERT_TRUE(view.ok()) << view.errors.front();
    EXPECT_EQ(check_turn_progress(view, g), std::vector<std::string>{}) << seed;
    EXPECT_EQ(check_neighbor_turns(view, g), std::vector<std::string>{}) << seed;
    EXPECT_EQ(check_win_lose(view, g), std::vector<std::string>{}) << seed;
    for (const auto& nt : view.nodes) {
      for (std::size_t i = 0; i < nt.tournaments.size(); ++i) {
        const auto& t = nt.tournaments[i];
        EXPECT_EQ(nt.turns[t.first_turn].state, kDown1);
        EXPECT_EQ(t.last, i + 1 == nt.tournaments.size());
        if (!t.last) {
          EXPECT_EQ(nt.turns[t.first_turn + t.num_turns - 1].state, kDown2);
        }
        EXPECT_GE(t.length, 3u);
      }
    }
  }
}

TEST(EdgeDecay, EmptyGraphHasNoRatios) {
  const auto g = NetworkGraph::from_edges(5, std::vector<Edge>{});
  const auto r = run_sync(build_mis_protocol(), g, uniform_inputs(g, kDown1), 1, full_trace());
  const auto series = edge_series(analyze_tournaments(r.trace), g);
  EXPECT_EQ(series, std::vector<std::uint64_t>{0});
  std::vector<std::vector<std::uint64_t>> runs(40, series);
  EXPECT_THROW(edge_decay_stats(runs), InsufficientSamples);
  EXPECT_TRUE(edge_decay_stats(runs, 0.95, 30, 0).empty());
}

TEST(EdgeDecay, CycleSeriesDecreaseToZero) {
  const auto g = cycle_graph(100);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto r = run_sync(build_mis_protocol(), g, uniform_inputs(g, kDown1), seed, full_trace());
    const auto series = edge_series(analyze_tournaments(r.trace), g);
    ASSERT_FALSE(series.empty());
    EXPECT_EQ(series.front(), 100u);
    EXPECT_EQ(series.back(), 0u);
    EXPECT_TRUE(std::is_sorted(series.rbegin(), series.rend())) << seed;
  }
}

TEST(EdgeDecay, StatsNeedEnoughRuns) {
  std::vector<std::vector<std::uint64_t>> runs(5, {200, 100, 10, 0});
  EXPECT_THROW(edge_decay_stats(runs), InsufficientSamples);
  runs.assign(30, {200, 100, 10, 0});
  const auto stats = edge_decay_stats(runs);
  ASSERT_GE(stats.size(), 1u);
  EXPECT_EQ(stats[0].tournament, 1u);
  EXPECT_DOUBLE_EQ(stats[0].mean, 0.5);
  EXPECT_DOUBLE_EQ(stats[0].upper, 0.5);
}

ColoringPhase phase_at(const PhaseView& view, std::size_t i) { return view.phases.at(i); }

TEST(Coloring, LayoutAndOutputs) {
  const auto p = build_coloring_protocol();
  EXPECT_EQ(p.num_states(), ColoringLayout::kStates);
  EXPECT_EQ(p.num_letters(), kColoringLetters);
  EXPECT_EQ(p.bound(), 3u);
  EXPECT_EQ(p.initial_letter(), coloring_letter(ColoringLetter::kActive));
  for (StateId q = 0; q < p.num_states(); ++q) {
    const auto m = coloring_mode(q);
    EXPECT_EQ(p.is_output(q), m.kind == ColoringModeKind::kColored);
    EXPECT_EQ(p.is_input(q), q == ColoringLayout::kRound1);
  }
  EXPECT_EQ(coloring_mode(ColoringLayout::colored(2)).color, 2);
  EXPECT_EQ(coloring_mode(ColoringLayout::waiting(5, 3)).snapshot, 5);
  EXPECT_EQ(coloring_mode(ColoringLayout::waiting(5, 3)).round, 3);
  EXPECT_THROW(coloring_mode(ColoringLayout::kStates), InvalidInput);
}

TEST(Coloring, ColoredIsAbsorbingAndSilent) {
  const auto p = build_coloring_protocol();
  std::vector<std::uint8_t> idx(kColoringLetters);
  for (int trial = 0; trial < 500; ++trial) {
    for (std::size_t l = 0; l < kColoringLetters; ++l) idx[l] = static_cast<std::uint8_t>((trial * 7 + l * 13) % 4);
    for (std::uint32_t c = 1; c <= 3; ++c) {
      const StateId q = ColoringLayout::colored(c);
      EXPECT_EQ(p.outcomes(q, CountView::from_indices(idx, 3)), (std::vector<Outcome>{{q, kEpsilon}}));
    }
  }
}

TEST(Coloring, TwoNodePathGetsTwoColors) {
  const auto g = path_graph(2);
  std::set<std::pair<int, int>> pairs;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto r = run_sync(build_coloring_protocol(), g, uniform_inputs(g, ColoringLayout::kRound1), seed);
    const auto a = coloring_mode(r.output_states[0]).color, b = coloring_mode(r.output_states[1]).color;
    EXPECT_NE(a, b);
    EXPECT_TRUE(verify_coloring_states(g, r.output_states).ok);
    pairs.insert({a, b});
  }
  // Every ordered pair of distinct colors shows up.
  EXPECT_EQ(pairs.size(), 6u);
}

TEST(Coloring, StarLeavesWaitOnCenter) {
  const auto g = star_graph(3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = run_sync(build_coloring_protocol(), g, uniform_inputs(g, ColoringLayout::kRound1), seed, full_trace());
    const auto view = analyze_phases(r.trace, g);
    ASSERT_TRUE(view.ok()) << view.errors.front();
    // Phase 1: the leaves see a deg3plus center and wait on it.
    ASSERT_EQ(view.waits.size(), 3u);
    for (const auto& w : view.waits) {
      EXPECT_EQ(w.target, 0u);
      EXPECT_EQ(w.phase, 1u);
    }
    // Phase 2: the center is alone and colors with probability 1.
    const auto p2 = phase_at(view, 1);
    EXPECT_EQ(p2.num_active, 1u);
    EXPECT_TRUE(p2.active[0]);
    EXPECT_EQ(p2.degree[0], 0u);
    EXPECT_EQ(view.colored_in[0], 2u);
    // Then the leaves come back with degree 0 and avoid the center's color.
    const auto center = coloring_mode(r.output_states[0]).color;
    for (NodeId leaf = 1; leaf <= 3; ++leaf) {
      EXPECT_EQ(view.colored_in[leaf], 3u);
      EXPECT_NE(coloring_mode(r.output_states[leaf]).color, center);
    }
    EXPECT_TRUE(check_waiting_hierarchy(view, g).empty());
  }
}

TEST(VerifyColoring, Examples) {
  const auto path = path_graph(3);
  EXPECT_TRUE(verify_coloring(path, std::vector<std::uint8_t>{1, 2, 1}).ok);
  const auto edge = path_graph(2);
  const auto bad = verify_coloring(edge, std::vector<std::uint8_t>{2, 2});
  EXPECT_FALSE(bad.ok);
  EXPECT_EQ(bad.witness, (std::vector<NodeId>{0, 1}));
  EXPECT_FALSE(verify_coloring(edge, std::vector<std::uint8_t>{1, 4}).ok);
  EXPECT_THROW(verify_coloring(cycle_graph(3), std::vector<std::uint8_t>{1, 2, 3}), NotATree);
  EXPECT_FALSE(verify_coloring_states(edge, std::vector<StateId>{ColoringLayout::colored(1), ColoringLayout::kRound1}).ok);
}

TEST(Coloring, PhaseChecksOnRandomTrees) {
  const auto p = build_coloring_protocol();
  std::size_t samples = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto g = random_tree(30 + 10 * seed, seed);
    const auto r = run_sync(p, g, uniform_inputs(g, ColoringLayout::kRound1), seed, full_trace());
    ASSERT_TRUE(verify_coloring_states(g, r.output_states).ok);
    const auto view = analyze_phases(r.trace, g);
    ASSERT_TRUE(view.ok()) << view.errors.front();
    EXPECT_EQ(check_palettes(view), std::vector<std::string>{}) << seed;
    EXPECT_EQ(check_waiting_hierarchy(view, g), std::vector<std::string>{}) << seed;
    for (const auto& s : good_node_samples(view, g)) {
      ++samples;
      EXPECT_GE(5 * s.good, s.tree_size) << "phase " << s.phase;
    }
  }
  EXPECT_GT(samples, 100u);
}

TEST(Coloring, GoodNodesOnFixedTrees) {
  // Path: every node has degree <= 2 with neighbors of degree <= 2.
  const auto path = path_graph(10);
  auto s = good_node_samples(path, std::vector<bool>(10, true));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].tree_size, 10u);
  EXPECT_EQ(s[0].good, 10u);
  // Star with 5 leaves: leaves good, the center not.
  s = good_node_samples(star_graph(5), std::vector<bool>(6, true));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].good, 5u);
  // Masking the center leaves five single-node trees.
  std::vector<bool> mask(6, true);
  mask[0] = false;
  s = good_node_samples(star_graph(5), mask);
  EXPECT_EQ(s.size(), 5u);
}

}  // namespace
}  // namespace nfsm
