#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "nfsm/adversary.hpp"
#include "nfsm/coloring.hpp"
#include "nfsm/engine.hpp"
#include "nfsm/mis.hpp"
#include "nfsm/multi_letter_compiler.hpp"
#include "nfsm/pipeline.hpp"
#include "nfsm/synchronizer.hpp"
#include "test_support.hpp"

namespace nfsm {
namespace {

using namespace nfsm::testing;

RunOptions full_trace() {
  RunOptions o;
  o.trace = TraceMode::kFull;
  o.keying = ChoiceKeying::kPerChoice;
  return o;
}

/// Raw single-letter protocol with an alphabet of `m` letters.
Protocol wide_alphabet_protocol(std::size_t m) {
  ProtocolBuilder b(1);
  const StateId q = b.add_state("q");
  const StateId done = b.add_state("done");
  for (std::size_t i = 0; i < m; ++i) b.add_letter("l" + std::to_string(i));
  b.set_initial_letter(0).mark_input(q).mark_output(done).set_query(q, 0).set_query(done, 0);
  for (auto c : {BoundedCount::exact(0), BoundedCount::saturated()}) {
    b.add_transition(q, c, {done, static_cast<LetterId>(m - 1)});
    b.add_transition(done, c, {done, kEpsilon});
  }
  return b.build();
}

TEST(Synchronizer, AlphabetOfSevenLettersGives192) {
  const CompiledProtocol cp = compile_synchronizer(wide_alphabet_protocol(7));
  EXPECT_EQ(cp.protocol.num_letters(), 3u * 8 * 8);
  EXPECT_EQ(cp.letters.size(), 192u);
}

TEST(Synchronizer, AlphabetIsTheFullProduct) {
  const CompiledProtocol cp = compile_synchronizer(wide_alphabet_protocol(3));
  std::set<std::tuple<LetterId, LetterId, int>> seen;
  for (const auto& a : cp.letters) seen.insert({a.prev, a.cur, a.trit});
  EXPECT_EQ(seen.size(), 3u * 4 * 4);
  const auto& init = cp.letters.at(cp.protocol.initial_letter());
  EXPECT_EQ(init.prev, kEpsilon);
  EXPECT_EQ(init.cur, 0u);
  EXPECT_EQ(init.trit, 0);
  EXPECT_EQ(cp.letter_id(kEpsilon, 0, 0), cp.protocol.initial_letter());
}

TEST(Synchronizer, RejectsOversizedAlphabet) {
  SynchronizerOptions o;
  o.max_letters = 4;
  EXPECT_THROW(compile_synchronizer(wide_alphabet_protocol(5), o), Error);
}

class CompiledStructure : public ::testing::TestWithParam<const char*> {
 protected:
  const CompiledProtocol& cp() const {
    return std::string(GetParam()) == "mis" ? mis_pipeline().compiled : coloring_pipeline().compiled;
  }
};

TEST_P(CompiledStructure, PausingStatesQueryDirtyTrit) {
  const auto& c = cp();
  std::size_t pausing = 0;
  for (StateId s = 0; s < c.protocol.num_states(); ++s) {
    const auto& a = c.states[s];
    if (a.feature != Feature::kPausing) continue;
    ++pausing;
    ASSERT_EQ(c.letters[c.protocol.query(s)].trit, (a.trit + 1) % 3) << c.protocol.state_name(s);
  }
  EXPECT_GT(pausing, 0u);
}

TEST_P(CompiledStructure, TransmitsOnlyAtPhaseEnds) {
  const auto& c = cp();
  const auto& p = c.protocol;
  for (StateId s = 0; s < p.num_states(); ++s) {
    for (std::uint32_t k = 0; k <= p.bound(); ++k) {
      for (const Outcome& o : p.transition_at(s, k)) {
        if (o.letter == kEpsilon) {
          EXPECT_EQ(c.states[o.next].trit, c.states[s].trit);
          continue;
        }
        // A transmission closes the round: the trit advances and pausing starts over.
        EXPECT_EQ(c.states[s].pass, 3);
        EXPECT_EQ(c.states[o.next].trit, (c.states[s].trit + 1) % 3);
        EXPECT_EQ(c.states[o.next].feature, Feature::kPausing);
        EXPECT_EQ(c.letters[o.letter].trit, c.states[s].trit);
      }
    }
  }
}

TEST_P(CompiledStructure, EveryStateHasOneTriple) {
  const auto& c = cp();
  ASSERT_EQ(c.states.size(), c.protocol.num_states());
  for (const auto& a : c.states) {
    EXPECT_LT(a.source, c.source_states);
    EXPECT_LT(a.trit, 3);
    EXPECT_EQ(a.feature == Feature::kPausing, a.pass == 0);
  }
  EXPECT_TRUE(validate_protocol(c.protocol).ok());
}

TEST_P(CompiledStructure, SizeWithinConstructionBound) {
  const auto& c = cp();
  const double m = static_cast<double>(c.source_letters + 1);
  const double b = c.bound + 1;
  // Per carrier and trit: m^2 pausing pairs, then three counting passes over the m+1
  // previous-round and m current-round letters carrying an accumulator, phi1 and phi2.
  const double per_carrier = 3 * (m * m + (m + 1) * b + m * b * b + (m + 1) * b * b * b);
  EXPECT_LE(static_cast<double>(c.protocol.num_states()), per_carrier * static_cast<double>(c.carriers));
  EXPECT_GT(c.size_reference(), 0u);
}

INSTANTIATE_TEST_SUITE_P(Protocols, CompiledStructure, ::testing::Values("mis", "coloring"));

TEST(Synchronizer, CounterReachesRoundTenInConstantTime) {
  const CompiledProtocol cp = compile_synchronizer(counter_protocol(10));
  const auto g = cycle_graph(8);
  const auto inputs = uniform_inputs(g, cp.compiled_input(0));
  // One simulated round is at most m^2 pausing steps plus (b+1) runs of the three passes
  // (m = |Sigma|+1 = 2); with neighbors at most one round apart a node waits for at most
  // a neighbor's round on top of its own.
  const double per_round = 4 + (cp.bound + 1) * 3 * 2;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = run_async(cp.protocol, g, inputs, UniformAdversary(seed), seed);
    ASSERT_TRUE(r.report.reached_output);
    EXPECT_LE(r.report.run_time, 3 * per_round * 10) << "seed " << seed;
    EXPECT_GE(r.report.run_time, 10.0);
  }
}

TEST(CheckS1S2, CounterUnderUniformHasNoViolations) {
  const CompiledProtocol cp = compile_synchronizer(counter_protocol(50));
  const auto g = gnp_degree(10, 3, 2);
  const auto inputs = uniform_inputs(g, cp.compiled_input(0));
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto r = run_async(cp.protocol, g, inputs, UniformAdversary(seed), seed, full_trace());
    const auto rep = check_S1_S2(r.trace, cp, g);
    ASSERT_TRUE(rep.ok()) << "seed " << seed << ": " << rep.violations.front();
    EXPECT_LE(rep.max_restarts, cp.bound);
    for (auto rounds : rep.rounds) EXPECT_GE(rounds, 50u);
  }
}

TEST(CheckS1S2, LockstepKeepsEveryoneInTheSameRound) {
  const CompiledProtocol cp = compile_synchronizer(counter_protocol(12));
  const auto g = cycle_graph(7);
  const auto r = run_async(cp.protocol, g, uniform_inputs(g, cp.compiled_input(0)), LockstepAdversary{}, 1, full_trace());
  const auto rep = check_S1_S2(r.trace, cp, g);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.max_restarts, 0u);
  // Replay rounds per integer time: after all steps ending at time t, rounds agree.
  std::vector<std::uint64_t> round(g.num_nodes(), 0);
  double time = 0;
  auto all_equal = [&] { return std::adjacent_find(round.begin(), round.end(), std::not_equal_to<>()) == round.end(); };
  for (const auto& e : r.trace.events) {
    if (e.kind != EventKind::kStepEnd) continue;
    if (e.time != time) {
      EXPECT_TRUE(all_equal()) << "t=" << time;
      time = e.time;
    }
    if (cp.states[e.after].trit != cp.states[e.before].trit) ++round[e.node];
  }
  EXPECT_TRUE(all_equal());
}

TEST(CheckS1S2, InjectedRoundJumpIsReported) {
  const CompiledProtocol cp = compile_synchronizer(counter_protocol(6));
  const auto g = path_graph(4);
  auto r = run_async(cp.protocol, g, uniform_inputs(g, cp.compiled_input(0)), UniformAdversary(3), 2, full_trace());
  ASSERT_TRUE(check_S1_S2(r.trace, cp, g).ok());
  // Node 0 finishes two extra rounds right after its first one.
  auto& ev = r.trace.events;
  auto it = std::find_if(ev.begin(), ev.end(), [&](const TraceEvent& e) {
    return e.kind == EventKind::kStepEnd && e.node == 0 && cp.states[e.after].trit != cp.states[e.before].trit;
  });
  ASSERT_NE(it, ev.end());
  const StateId from = it->after;
  auto with_trit = [&](std::uint32_t trit) {
    for (StateId s = 0; s < cp.states.size(); ++s)
      if (cp.states[s].trit == trit && cp.states[s].feature == Feature::kPausing) return s;
    return StateId{0};
  };
  TraceEvent a = *it;
  a.before = from;
  a.after = with_trit((cp.states[from].trit + 1) % 3);
  TraceEvent b = a;
  b.before = a.after;
  b.after = with_trit((cp.states[from].trit + 2) % 3);
  const auto pos = it - ev.begin() + 1;
  ev.insert(ev.begin() + pos, {a, b});
  const auto rep = check_S1_S2(r.trace, cp, g);
  ASSERT_FALSE(rep.ok());
  EXPECT_TRUE(std::any_of(rep.violations.begin(), rep.violations.end(),
                          [](const std::string& v) { return v.find("(S1)") != std::string::npos; }));
}

TEST(MultiLetter, MisLoweringIsSmallAndValid) {
  const auto mis = build_mis_protocol();
  const auto c = compile_multi_letter(mis);
  EXPECT_LE(c.protocol.num_states(), mis.num_states() * 7 * 128);
  EXPECT_EQ(c.subrounds, 7u);
  EXPECT_TRUE(validate_protocol(c.protocol).ok());
  for (StateId q = 0; q < mis.num_states(); ++q) EXPECT_EQ(c.source_of(c.entry_state[q]), q);
}

TEST(MultiLetter, RejectsAboveCap) {
  MultiLetterCompileOptions o;
  o.max_states = 20;
  EXPECT_THROW(compile_multi_letter(build_mis_protocol(), o), CompilationCapExceeded);
}

TEST(MultiLetter, OneObservedLetterIsRoundForRound) {
  // Three letters; both states only look at `tick`, flipping a coin while it is absent.
  NameTable letters;
  const LetterId tick = letters.add("tick");
  letters.add("unused1");
  letters.add("unused2");
  auto zero = [tick](const CountView& c) { return c.zero(tick); };
  auto some = [tick](const CountView& c) { return c.present(tick); };
  MultiLetterState a{"a", true, false, {tick}, {}};
  a.rules.push_back({"idle", zero, {{0, kEpsilon}, {1, tick}}});
  a.rules.push_back({"heard", some, {{1, kEpsilon}}});
  MultiLetterState b{"b", false, true, {tick}, {}};
  b.rules.push_back({"stay", [](const CountView&) { return true; }, {{1, kEpsilon}}});
  const MultiLetterProtocol p(letters, 1, 1, {a, b});
  ASSERT_TRUE(validate_protocol(p).ok());
  const auto c = compile_multi_letter(p);
  EXPECT_EQ(c.subrounds, 3u);

  const auto g = cycle_graph(9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ref = run_sync(p, g, uniform_inputs(g, 0), seed, full_trace());
    const auto low = run_sync(c.protocol, g, uniform_inputs(g, c.entry_state[0]), seed, full_trace());
    const auto rows = state_history(ref.trace);
    const auto lrows = state_history(low.trace);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      ASSERT_LT(r * 3, lrows.size());
      for (NodeId v = 0; v < g.num_nodes(); ++v) EXPECT_EQ(c.source_of(lrows[r * 3][v]), rows[r][v]);
    }
    for (const auto& e : low.trace.events) {
      if (e.kind == EventKind::kStepEnd && e.step % 3 != 0) {
        EXPECT_EQ(e.letter, kEpsilon);
      }
    }
  }
}

TEST(MultiLetter, ColoringLoweredMatchesOnPathOfThree) {
  const auto& pl = coloring_pipeline();
  const auto g = path_graph(3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RunOptions o;
    o.keying = ChoiceKeying::kPerChoice;
    const auto ref = run_sync(pl.source, g, uniform_inputs(g, ColoringLayout::kRound1), seed, o);
    const auto low = run_sync(pl.lowered.protocol, g, uniform_inputs(g, pl.lowered.entry_state[ColoringLayout::kRound1]),
                              seed, o);
    std::vector<StateId> back(3);
    for (NodeId v = 0; v < 3; ++v) back[v] = pl.lowered.source_of(low.output_states[v]);
    EXPECT_EQ(back, ref.output_states) << "seed " << seed;
  }
}

TEST(Equivalence, MisOnRandomTree) {
  const auto& pl = mis_pipeline();
  const auto g = random_tree(20, 4);
  std::vector<std::uint64_t> seeds(50);
  std::iota(seeds.begin(), seeds.end(), 1);
  const auto rep = equivalence_harness(pl, g, uniform_inputs(g, mis_id(MisState::kDown1)), UniformAdversary(6), seeds);
  EXPECT_TRUE(rep.all_identical());
  for (const auto& c : rep.cases) EXPECT_TRUE(c.identical) << c.seed << ": " << c.message;
  EXPECT_GT(rep.median_overhead, 1.0);
}

TEST(Equivalence, SingleNode) {
  const auto& pl = mis_pipeline();
  const auto g = NetworkGraph::from_edges(1, std::vector<Edge>{});
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto rep = equivalence_harness(pl, g, uniform_inputs(g, mis_id(MisState::kDown1)), UniformAdversary(1), seeds);
  EXPECT_TRUE(rep.all_identical());
  EXPECT_TRUE(std::isfinite(rep.median_overhead));
  EXPECT_GT(rep.median_overhead, 0.0);
}

TEST(Equivalence, SimulatedHistoryFollowsReference) {
  const auto& pl = mis_pipeline();
  const auto g = gnp_degree(16, 2, 3);
  const auto inputs = uniform_inputs(g, mis_id(MisState::kDown1));
  const auto ref = run_sync(pl.source, g, inputs, 9, full_trace());
  const auto got = run_pipeline(pl, g, inputs, SkewAdversary(2, {0, 5}, 1.0), 9, full_trace());
  const auto expected = state_history(ref.trace);
  const auto simulated = simulated_history(pl, got.trace);
  ASSERT_GE(simulated.size(), expected.size() - 1);
  for (std::size_t r = 0; r < expected.size(); ++r) {
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      if (simulated[r][v] != kNoLetter) {
        EXPECT_EQ(simulated[r][v], expected[r][v]) << "round " << r << " node " << v;
      }
    }
  }
}

TEST(Annotations, SidecarRoundTrip) {
  const CompiledProtocol cp = compile_synchronizer(counter_protocol(3));
  std::stringstream s;
  write_annotations(s, cp);
  const CompiledProtocol back = read_annotations(s, cp.protocol);
  ASSERT_EQ(back.states.size(), cp.states.size());
  for (std::size_t i = 0; i < cp.states.size(); ++i) {
    EXPECT_EQ(back.states[i].source, cp.states[i].source);
    EXPECT_EQ(back.states[i].trit, cp.states[i].trit);
    EXPECT_EQ(back.states[i].pass, cp.states[i].pass);
  }
  EXPECT_EQ(back.inputs, cp.inputs);
  EXPECT_EQ(back.carriers, cp.carriers);
}

}  // namespace
}  // namespace nfsm
