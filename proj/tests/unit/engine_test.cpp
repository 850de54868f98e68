#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "nfsm/adversary.hpp"
#include "nfsm/coloring.hpp"
#include "nfsm/engine.hpp"
#include "nfsm/mis.hpp"
#include "nfsm/rng.hpp"
#include "nfsm/trace.hpp"
#include "test_support.hpp"

namespace nfsm {
namespace {

using namespace nfsm::testing;

RunOptions full_trace() {
  RunOptions o;
  o.trace = TraceMode::kFull;
  return o;
}

/// States x, y over letters a, b with a coin in every state: a protocol that never
/// settles, for comparing engines step by step.
Protocol coin_protocol() {
  ProtocolBuilder b(2);
  const StateId x = b.add_state("x");
  const StateId y = b.add_state("y");
  const LetterId a = b.add_letter("a");
  const LetterId l = b.add_letter("b");
  b.set_initial_letter(a).mark_input(x).mark_input(y).set_query(x, a).set_query(y, l);
  b.add_transition(x, BoundedCount::exact(0), {x, a}).add_transition(x, BoundedCount::exact(0), {y, l});
  b.add_transition(x, BoundedCount::exact(1), {y, kEpsilon});
  b.add_transition(x, BoundedCount::saturated(), {y, a}).add_transition(x, BoundedCount::saturated(), {x, l});
  b.add_transition(y, BoundedCount::exact(0), {x, a});
  b.add_transition(y, BoundedCount::exact(1), {y, l}).add_transition(y, BoundedCount::exact(1), {x, kEpsilon});
  b.add_transition(y, BoundedCount::saturated(), {y, a}).add_transition(y, BoundedCount::saturated(), {x, kEpsilon});
  return b.build();
}

TEST(RunAsync, SingleNodeOneStep) {
  const Protocol p = one_step_protocol();
  const auto g = NetworkGraph::from_edges(1, std::vector<Edge>{});
  const auto r = run_async(p, g, std::vector<StateId>{0}, LockstepAdversary{}, 1);
  ASSERT_TRUE(r.report.reached_output);
  EXPECT_DOUBLE_EQ(r.report.run_time, 1.0);
  EXPECT_EQ(r.report.steps, std::vector<std::uint64_t>{1});
  EXPECT_EQ(r.output_states, std::vector<StateId>{1});
}

TEST(RunAsync, MisOnK2HasExactlyOneWinner) {
  const Pipeline& pl = mis_pipeline();
  const auto g = path_graph(2);
  const auto inputs = uniform_inputs(g, mis_id(MisState::kDown1));
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto r = run_pipeline(pl, g, inputs, LockstepAdversary{}, seed);
    const auto out = pl.source_states(r.output_states);
    const auto wins = std::count(out.begin(), out.end(), mis_id(MisState::kWin));
    EXPECT_EQ(wins, 1) << "seed " << seed;
    EXPECT_TRUE(verify_mis_states(g, out).ok);
  }
}

TEST(RunAsync, DeterministicTraces) {
  const Protocol p = coin_protocol();
  const auto g = gnp_degree(30, 3, 5);
  const auto inputs = uniform_inputs(g, 0);
  RunOptions o = full_trace();
  o.max_events = 20'000;
  o.throw_on_cap = false;
  UniformAdversary adv(9);
  const auto a = run_async(p, g, inputs, adv, 4, o);
  const auto b = run_async(p, g, inputs, adv, 4, o);
  std::ostringstream ta, tb;
  write_trace_binary(ta, a.trace);
  write_trace_binary(tb, b.trace);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_EQ(a.trace.hash, b.trace.hash);
  const auto c = run_async(p, g, inputs, adv, 5, o);
  EXPECT_NE(a.trace.hash, c.trace.hash);
}

TEST(RunAsync, RejectsEmptyGraphAndBadInputs) {
  const Protocol p = one_step_protocol();
  const auto empty = NetworkGraph::from_edges(0, std::vector<Edge>{});
  EXPECT_THROW(run_async(p, empty, std::vector<StateId>{}, LockstepAdversary{}, 1), InvalidInput);
  EXPECT_THROW(run_sync(build_mis_protocol(), empty, std::vector<StateId>{}, 1), InvalidInput);
  const auto g = path_graph(2);
  // State 1 is not an input state.
  EXPECT_THROW(run_async(p, g, std::vector<StateId>{0, 1}, LockstepAdversary{}, 1), InvalidInput);
  EXPECT_THROW(run_async(p, g, std::vector<StateId>{0}, LockstepAdversary{}, 1), InvalidInput);
}

TEST(RunAsync, CapExceeded) {
  const Protocol p = beacon_protocol();
  const auto g = path_graph(3);
  RunOptions o;
  o.max_events = 1000;
  EXPECT_THROW(run_async(p, g, uniform_inputs(g, 0), LockstepAdversary{}, 1, o), CapExceeded);
  o.throw_on_cap = false;
  const auto r = run_async(p, g, uniform_inputs(g, 0), LockstepAdversary{}, 1, o);
  EXPECT_FALSE(r.report.reached_output);
  EXPECT_TRUE(r.output_states.empty());
}

TEST(RunAsync, LockstepMatchesHandRolledRounds) {
  const Protocol p = coin_protocol();
  const auto g = gnp_degree(25, 3, 2);
  const std::size_t n = g.num_nodes();
  const std::uint64_t seed = 77;
  const std::uint64_t rounds = 60;
  std::vector<StateId> inputs(n);
  for (NodeId v = 0; v < n; ++v) inputs[v] = v % 2;

  // expected[t][v]: state after step t; ports hold the last non-eps letter of earlier rounds.
  std::vector<std::vector<StateId>> expected{inputs};
  std::vector<LetterId> last(n, p.initial_letter());
  for (std::uint64_t t = 1; t <= rounds; ++t) {
    std::vector<StateId> next(n);
    std::vector<LetterId> sent = last;
    for (NodeId v = 0; v < n; ++v) {
      const StateId q = expected.back()[v];
      std::uint64_t count = 0;
      for (NodeId u : g.neighbors(v)) count += last[u] == p.query(q) ? 1 : 0;
      const auto outs = p.transition(q, f_bounded(count, p.bound()));
      const std::size_t k = outs.size() == 1 ? 0 : uniform_below(draw_word(seed, v, t), outs.size());
      next[v] = outs[k].next;
      if (outs[k].letter != kEpsilon) sent[v] = outs[k].letter;
    }
    expected.push_back(next);
    last = sent;
  }

  RunOptions o = full_trace();
  o.max_events = 1'000'000;
  o.throw_on_cap = false;
  const auto r = run_async(p, g, inputs, LockstepAdversary{}, seed, o);
  std::size_t compared = 0;
  for (const auto& e : r.trace.events) {
    if (e.kind != EventKind::kStepEnd || e.step > rounds) continue;
    EXPECT_DOUBLE_EQ(e.time, static_cast<double>(e.step));
    ASSERT_EQ(e.after, expected[e.step][e.node]) << "node " << e.node << " step " << e.step;
    ++compared;
  }
  EXPECT_EQ(compared, rounds * n);

  // run_sync of the same single-letter protocol is the same semantics.
  RunOptions so = full_trace();
  so.max_events = rounds * n;
  so.throw_on_cap = false;
  const auto s = run_sync(p, g, inputs, seed, so);
  const auto rows = state_history(s.trace);
  ASSERT_GE(rows.size(), rounds + 1);
  for (std::uint64_t t = 0; t <= rounds; ++t) EXPECT_EQ(rows[t], expected[t]) << "round " << t;
}

TEST(RunSync, ColoringOnTwoNodePath) {
  const auto p = build_coloring_protocol();
  const auto g = path_graph(2);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = run_sync(p, g, uniform_inputs(g, ColoringLayout::kRound1), seed);
    ASSERT_EQ(r.output_states.size(), 2u);
    const auto a = coloring_mode(r.output_states[0]);
    const auto b = coloring_mode(r.output_states[1]);
    EXPECT_EQ(a.kind, ColoringModeKind::kColored);
    EXPECT_EQ(b.kind, ColoringModeKind::kColored);
    EXPECT_NE(a.color, b.color) << "seed " << seed;
  }
}

TEST(RunSync, MisSingleNodeWins) {
  const auto g = NetworkGraph::from_edges(1, std::vector<Edge>{});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto r = run_sync(build_mis_protocol(), g, uniform_inputs(g, mis_id(MisState::kDown1)), seed);
    EXPECT_EQ(r.output_states[0], mis_id(MisState::kWin));
  }
}

TEST(Adversary, LockstepTimeUnitIsOne) {
  const auto g = cycle_graph(6);
  const auto r = run_async(counter_protocol(5), g, uniform_inputs(g, 0), *make_adversary("lockstep"), 3, full_trace());
  EXPECT_DOUBLE_EQ(r.report.time_unit, 1.0);
  EXPECT_DOUBLE_EQ(r.report.run_time, 5.0);
  for (const auto& e : r.trace.events) {
    if (e.kind != EventKind::kOutputConfig) {
      EXPECT_DOUBLE_EQ(e.value, 1.0);
    }
  }
}

TEST(Adversary, ValuesInUnitInterval) {
  for (const std::string spec : {"uniform:4", "skew:2:0,3:0.5"}) {
    const auto adv = make_adversary(spec);
    for (NodeId v = 0; v < 5; ++v) {
      for (std::uint64_t t = 1; t < 50; ++t) {
        const double l = adv->step_length(v, t);
        EXPECT_GT(l, 0);
        EXPECT_LE(l, 1);
        const double d = adv->delay(v, t, (v + 1) % 5);
        EXPECT_GT(d, 0);
        EXPECT_LE(d, 1);
      }
    }
  }
}

TEST(Adversary, ReplayReproducesReport) {
  const auto g = gnp_degree(20, 3, 1);
  const Protocol p = counter_protocol(12);
  const auto r = run_async(p, g, uniform_inputs(g, 0), UniformAdversary(8), 3, full_trace());
  std::stringstream file;
  extract_schedule(r.trace).write(file);
  const ReplayAdversary replay = ReplayAdversary::from_stream(file);
  const auto again = run_async(p, g, uniform_inputs(g, 0), replay, 3, full_trace());
  EXPECT_EQ(again.report.output_time, r.report.output_time);
  EXPECT_EQ(again.report.time_unit, r.report.time_unit);
  EXPECT_EQ(again.report.run_time, r.report.run_time);
  EXPECT_EQ(again.report.steps, r.report.steps);
  EXPECT_EQ(again.trace.hash, r.trace.hash);
}

TEST(Adversary, SkewTimeUnitIsTheSlowFactor) {
  const auto g = cycle_graph(8);
  const auto adv = make_adversary("skew:5:3:1");
  const auto r = run_async(counter_protocol(6), g, uniform_inputs(g, 0), *adv, 1);
  EXPECT_DOUBLE_EQ(r.report.time_unit, 1.0);
  EXPECT_DOUBLE_EQ(adv->step_length(3, 1), 1.0);
  EXPECT_LE(adv->step_length(0, 1), SkewAdversary::kDefaultFastMax);
}

TEST(Adversary, CatalogAndUnknownNames) {
  std::vector<std::string> names;
  for (const auto& info : adversary_catalog()) names.push_back(info.name);
  for (const char* want : {"lockstep", "uniform", "skew", "replay"})
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
  EXPECT_THROW(make_adversary("fastest"), UnknownPolicy);
}

TEST(TraceWellformed, EngineTracesAreClean) {
  const auto g = gnp_degree(20, 3, 4);
  RunOptions o = full_trace();
  o.max_events = 30'000;
  o.throw_on_cap = false;
  const Protocol p = coin_protocol();
  const auto r = run_async(p, g, uniform_inputs(g, 0), UniformAdversary(2), 6, o);
  EXPECT_TRUE(check_trace_wellformed(r.trace, g).empty());
  EXPECT_TRUE(check_trace_wellformed(r.trace, g, p).empty());
  const auto mis = build_mis_protocol();
  RunOptions so = full_trace();
  const auto s = run_sync(mis, g, uniform_inputs(g, mis_id(MisState::kDown1)), 6, so);
  EXPECT_TRUE(check_trace_wellformed(s.trace, g, mis).empty());
}

TEST(TraceWellformed, SwappedDeliveriesBreakFifo) {
  const auto g = path_graph(2);
  const Protocol p = beacon_protocol();
  RunOptions o = full_trace();
  o.max_events = 40;
  o.throw_on_cap = false;
  auto r = run_async(p, g, uniform_inputs(g, 0), LockstepAdversary{}, 1, o);
  auto& ev = r.trace.events;
  std::vector<std::size_t> link;
  for (std::size_t i = 0; i < ev.size(); ++i)
    if (ev[i].kind == EventKind::kDelivery && ev[i].peer == 0) link.push_back(i);
  ASSERT_GE(link.size(), 2u);
  std::swap(ev[link[0]].step, ev[link[1]].step);
  const auto violations = check_trace_wellformed(r.trace, g);
  ASSERT_FALSE(violations.empty());
}

TEST(TraceWellformed, ReadBeforeDeliveryMustSeeInitialLetter) {
  const auto g = path_graph(2);
  const Protocol p = coin_protocol();
  RunOptions o = full_trace();
  o.max_events = 40;
  o.throw_on_cap = false;
  auto r = run_async(p, g, std::vector<StateId>{0, 0}, LockstepAdversary{}, 1, o);
  // Both first reads see one copy of sigma_0 = a.
  auto first = std::find_if(r.trace.events.begin(), r.trace.events.end(),
                            [](const TraceEvent& e) { return e.kind == EventKind::kStepEnd; });
  ASSERT_EQ(first->observed, 1u);
  first->observed = 0;
  EXPECT_FALSE(check_trace_wellformed(r.trace, g, p).empty());
}

TEST(TraceWellformed, TimeMustNotDecrease) {
  const auto g = path_graph(3);
  RunOptions o = full_trace();
  auto r = run_async(counter_protocol(3), g, uniform_inputs(g, 0), UniformAdversary(1), 1, o);
  ASSERT_GE(r.trace.events.size(), 3u);
  r.trace.events[2].time = -1;
  EXPECT_FALSE(check_trace_wellformed(r.trace, g).empty());
}

TEST(Ports, OverwriteLosesMessages) {
  // Node 0 steps ten times as fast as node 1 reads, so several letters land between
  // two of node 1's reads and only the last survives.
  const auto g = path_graph(2);
  ReplayAdversary adv;
  for (std::uint64_t t = 1; t <= 100; ++t) {
    adv.set_step_length(0, t, 0.1);
    adv.set_delay(0, t, 1, 0.05);
  }
  const Protocol p = coin_protocol();
  RunOptions o = full_trace();
  o.max_events = 200;
  o.throw_on_cap = false;
  const auto r = run_async(p, g, std::vector<StateId>{0, 0}, adv, 3, o);
  std::size_t pending = 0, max_between_reads = 0;
  for (const auto& e : r.trace.events) {
    if (e.kind == EventKind::kDelivery && e.node == 1) ++pending;
    if (e.kind == EventKind::kStepEnd && e.node == 1) {
      max_between_reads = std::max(max_between_reads, pending);
      pending = 0;
    }
  }
  EXPECT_GE(max_between_reads, 2u);
  // Every read still reflects exactly the last delivered letter.
  EXPECT_TRUE(check_trace_wellformed(r.trace, g, p).empty());
}

TEST(Outputs, AbsorbingCheck) {
  EXPECT_TRUE(one_step_protocol().outputs_absorbing());
  EXPECT_TRUE(counter_protocol(3).outputs_absorbing());
  const auto g = cycle_graph(5);
  RunOptions o = full_trace();
  o.continue_after_output = true;
  o.max_events = 500;
  o.throw_on_cap = false;
  const Protocol p = counter_protocol(3);
  const auto r = run_async(p, g, uniform_inputs(g, 0), UniformAdversary(3), 1, o);
  EXPECT_TRUE(r.report.reached_output);
  EXPECT_TRUE(check_outputs_stay(r.trace, [&](StateId q) { return p.is_output(q); }).empty());
}

TEST(TraceIo, TextAndBinaryRoundTrip) {
  const auto g = gnp_degree(12, 3, 3);
  const auto mis = build_mis_protocol();
  const auto r = run_sync(mis, g, uniform_inputs(g, mis_id(MisState::kDown1)), 2, full_trace());
  for (bool binary : {false, true}) {
    std::stringstream s;
    if (binary) {
      write_trace_binary(s, r.trace);
    } else {
      write_trace_text(s, r.trace);
    }
    const ExecutionTrace back = binary ? read_trace_binary(s) : read_trace_text(s);
    EXPECT_EQ(back.events, r.trace.events);
    EXPECT_EQ(back.observed_vectors, r.trace.observed_vectors);
    EXPECT_EQ(back.initial_states, r.trace.initial_states);
    EXPECT_EQ(back.hash, r.trace.hash);
  }
}

TEST(Trace, HashOnlyModeMatchesFullMode) {
  const auto g = gnp_degree(40, 2, 8);
  const auto mis = build_mis_protocol();
  const auto inputs = uniform_inputs(g, mis_id(MisState::kDown1));
  const auto a = run_sync(mis, g, inputs, 5);
  const auto b = run_sync(mis, g, inputs, 5, full_trace());
  EXPECT_TRUE(a.trace.events.empty());
  EXPECT_EQ(a.trace.hash, b.trace.hash);
  EXPECT_EQ(a.trace.num_events, b.trace.events.size());
}

}  // namespace
}  // namespace nfsm
