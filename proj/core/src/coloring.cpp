#include "nfsm/coloring.hpp"

#include <algorithm>
#include <queue>

#include "nfsm/engine.hpp"

namespace nfsm {
namespace {

using L = ColoringLetter;
using Layout = ColoringLayout;

constexpr LetterId lt(L l) { return coloring_letter(l); }
constexpr LetterId degree_letter(std::uint32_t d) { return lt(L::kDeg0) + d; }
constexpr LetterId propose_letter(std::uint32_t c) { return lt(L::kPropose1) + c - 1; }
constexpr LetterId color_letter(std::uint32_t c) { return lt(L::kColor1) + c - 1; }

std::string snapshot_name(std::uint32_t mask) {
  std::string s;
  for (std::uint32_t c = 1; c <= 3; ++c)
    if (mask >> (c - 1) & 1) s += std::to_string(c);
  return s.empty() ? "none" : s;
}

bool is_waiting(StateId q) { return q >= Layout::kWaitingBase && q < Layout::kStates; }
bool is_colored(StateId q) { return q >= Layout::kColored && q < Layout::kColored + 3; }

}  // namespace

ColoringMode coloring_mode(StateId q) {
  ColoringMode m;
  if (q >= Layout::kStates) throw InvalidInput("state " + std::to_string(q) + " is not a coloring state");
  if (is_colored(q)) {
    m.kind = ColoringModeKind::kColored;
    m.color = static_cast<std::uint8_t>(q - Layout::kColored + 1);
  } else if (is_waiting(q)) {
    m.kind = ColoringModeKind::kWaiting;
    m.round = static_cast<std::uint8_t>((q - Layout::kWaitingBase) % 4 + 1);
    m.snapshot = static_cast<std::uint8_t>((q - Layout::kWaitingBase) / 4);
  } else if (q == Layout::kRound1) {
    m.round = 1;
  } else if (q == Layout::kRound2) {
    m.round = 2;
  } else if (q < Layout::kIdle) {
    m.round = 3;
  } else {
    m.round = 4;
  }
  return m;
}

MultiLetterProtocol build_coloring_protocol() {
  NameTable letters;
  for (const char* name : {"Active", "Waiting", "deg0", "deg1", "deg2", "deg3plus", "propose1", "propose2", "propose3",
                           "color1", "color2", "color3"})
    letters.add(name);

  const auto always = [](const CountView&) { return true; };
  std::vector<MultiLetterState> states(Layout::kStates);

  auto& r1 = states[Layout::kRound1];
  r1.name = "active.r1";
  r1.input = true;
  r1.rules = {{"announce", always, {{Layout::kRound2, lt(L::kActive)}}}};

  auto& r2 = states[Layout::kRound2];
  r2.name = "active.r2";
  r2.observed = {lt(L::kActive)};
  for (std::uint32_t d = 0; d <= 3; ++d) {
    r2.rules.push_back({"degree" + std::to_string(d),
                        [d](const CountView& c) { return c.index(lt(L::kActive)) == d; },
                        {{Layout::round3(d), degree_letter(d)}}});
  }

  const LetterId colors[] = {color_letter(1), color_letter(2), color_letter(3)};
  for (std::uint32_t d = 0; d <= 3; ++d) {
    auto& s = states[Layout::round3(d)];
    s.name = "active.r3.d" + std::to_string(d);
    if (d == 3) {
      s.rules = {{"busy", always, {{Layout::kIdle, kEpsilon}}}};
      continue;
    }
    s.observed.assign(std::begin(colors), std::end(colors));
    if (d == 1) s.observed.push_back(lt(L::kDeg1));
    if (d == 2) s.observed.push_back(lt(L::kDeg3Plus));
    auto eligible = [d](const CountView& c) {
      return d == 0 || (d == 1 && c.present(lt(L::kDeg1))) || (d == 2 && c.zero(lt(L::kDeg3Plus)));
    };
    for (std::uint32_t col = 1; col <= 3; ++col) {
      s.rules.push_back({"propose" + std::to_string(col),
                         [=](const CountView& c) { return eligible(c) && c.zero(color_letter(col)); },
                         {{Layout::proposed(col), propose_letter(col)}}});
    }
    // Unreachable when the palette invariant holds; keeps the table total.
    s.rules.push_back({"no-color",
                       [=](const CountView& c) {
                         return eligible(c) && c.present(colors[0]) && c.present(colors[1]) && c.present(colors[2]);
                       },
                       {{Layout::kIdle, kEpsilon}}});
    if (d == 2) {
      s.rules.push_back({"busy", [=](const CountView& c) { return !eligible(c); }, {{Layout::kIdle, kEpsilon}}});
    }
    if (d == 1) {
      for (std::uint32_t mask = 0; mask < 8; ++mask) {
        s.rules.push_back({"wait." + snapshot_name(mask),
                           [=](const CountView& c) {
                             if (eligible(c)) return false;
                             for (std::uint32_t k = 0; k < 3; ++k)
                               if (c.present(colors[k]) != (mask >> k & 1)) return false;
                             return true;
                           },
                           {{Layout::waiting(mask, 4), lt(L::kWaiting)}}});
      }
    }
  }

  auto& idle = states[Layout::kIdle];
  idle.name = "active.r4";
  idle.rules = {{"next-phase", always, {{Layout::kRound1, kEpsilon}}}};

  for (std::uint32_t col = 1; col <= 3; ++col) {
    auto& s = states[Layout::proposed(col)];
    s.name = "active.r4.p" + std::to_string(col);
    s.observed = {propose_letter(col)};
    s.rules = {
        {"conflict", [=](const CountView& c) { return c.present(propose_letter(col)); }, {{Layout::kRound1, kEpsilon}}},
        {"commit",
         [=](const CountView& c) { return c.zero(propose_letter(col)); },
         {{Layout::colored(col), color_letter(col)}}},
    };
    auto& out = states[Layout::colored(col)];
    out.name = "colored" + std::to_string(col);
    out.output = true;
    out.rules = {{"absorbing", always, {{Layout::colored(col), kEpsilon}}}};
  }

  for (std::uint32_t mask = 0; mask < 8; ++mask) {
    for (std::uint32_t r = 1; r <= 4; ++r) {
      auto& s = states[Layout::waiting(mask, r)];
      s.name = "waiting." + snapshot_name(mask) + ".r" + std::to_string(r);
      const StateId next = Layout::waiting(mask, r % 4 + 1);
      if (r != 1) {
        s.rules = {{"tick", always, {{next, kEpsilon}}}};
        continue;
      }
      // Color letters only change in round 4, so the check in round 1 sees every new one.
      s.observed.assign(std::begin(colors), std::end(colors));
      auto woken = [=](const CountView& c) {
        for (std::uint32_t k = 0; k < 3; ++k)
          if (c.index(colors[k]) > (mask >> k & 1)) return true;
        return false;
      };
      s.rules = {
          {"wake", woken, {{Layout::kRound2, lt(L::kActive)}}},
          {"tick", [=](const CountView& c) { return !woken(c); }, {{next, kEpsilon}}},
      };
    }
  }

  return MultiLetterProtocol(std::move(letters), lt(L::kActive), 3, std::move(states));
}

Verdict verify_coloring(const NetworkGraph& g, std::span<const std::uint8_t> colors) {
  if (!g.is_tree()) throw NotATree("coloring verifier expects a tree");
  if (colors.size() != g.num_nodes()) return Verdict::fail("color assignment has the wrong size", {});
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (colors[v] < 1 || colors[v] > 3) {
      return Verdict::fail("node " + std::to_string(v) + " has color " + std::to_string(colors[v]), {v});
    }
  }
  for (const auto& [u, v] : g.edges()) {
    if (colors[u] == colors[v]) {
      return Verdict::fail("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") is monochromatic", {u, v});
    }
  }
  return Verdict::pass();
}

Verdict verify_coloring_states(const NetworkGraph& g, std::span<const StateId> states) {
  if (!g.is_tree()) throw NotATree("coloring verifier expects a tree");
  std::vector<std::uint8_t> colors(states.size());
  for (NodeId v = 0; v < states.size(); ++v) {
    if (!is_colored(states[v])) return Verdict::fail("node " + std::to_string(v) + " is not colored", {v});
    colors[v] = static_cast<std::uint8_t>(states[v] - Layout::kColored + 1);
  }
  return verify_coloring(g, colors);
}

PhaseView analyze_phases(const ExecutionTrace& t, const NetworkGraph& g) {
  PhaseView view;
  if (t.mode != TraceMode::kFull) {
    view.errors.push_back("trace was recorded without events");
    return view;
  }
  if (t.num_nodes != g.num_nodes()) {
    view.errors.push_back("trace and graph disagree on the node count");
    return view;
  }
  const auto rows = state_history(t);
  const NodeId n = g.num_nodes();
  view.colored_in.assign(n, 0);
  for (std::size_t c = 1; c < rows.size(); ++c) {
    for (NodeId v = 0; v < n; ++v) {
      if (view.colored_in[v] == 0 && is_colored(rows[c][v])) view.colored_in[v] = static_cast<std::uint32_t>((c - 1) / 4 + 1);
    }
  }

  std::vector<bool> waited(n, false);
  for (std::uint32_t i = 1;; ++i) {
    const std::size_t start = 4 * static_cast<std::size_t>(i - 1);
    if (start + 1 >= rows.size()) break;
    const auto& at_start = rows[start];
    if (std::all_of(at_start.begin(), at_start.end(), is_colored)) break;
    for (NodeId v = 0; v < n; ++v)
      if (is_waiting(rows[start + 1][v])) waited[v] = true;

    ColoringPhase ph;
    ph.active.assign(n, false);
    ph.never_waited.assign(n, false);
    ph.degree.assign(n, 0);
    ph.palette.assign(n, 0);
    for (NodeId v = 0; v < n; ++v) {
      ph.active[v] = rows[start + 1][v] == Layout::kRound2;
      ph.never_waited[v] = ph.active[v] && !waited[v];
      if (ph.active[v]) ++ph.num_active;
    }
    for (NodeId v = 0; v < n; ++v) {
      if (!ph.active[v]) continue;
      bool used[4] = {};
      for (NodeId u : g.neighbors(v)) {
        if (ph.active[u]) ++ph.degree[v];
        if (is_colored(at_start[u])) used[at_start[u] - Layout::kColored + 1] = true;
      }
      ph.palette[v] = static_cast<std::uint8_t>(!used[1] + !used[2] + !used[3]);
    }
    if (start + 3 < rows.size()) {
      for (NodeId v = 0; v < n; ++v) {
        if (rows[start + 2][v] != Layout::round3(1) || !is_waiting(rows[start + 3][v])) continue;
        std::vector<NodeId> targets;
        for (NodeId u : g.neighbors(v))
          if (ph.active[u]) targets.push_back(u);
        if (targets.size() != 1) {
          view.errors.push_back("node " + std::to_string(v) + " waits in phase " + std::to_string(i) + " with " +
                                std::to_string(targets.size()) + " Active neighbors");
          continue;
        }
        view.waits.push_back({v, targets[0], i});
      }
    }
    view.phases.push_back(std::move(ph));
  }
  return view;
}

std::vector<std::string> check_palettes(const PhaseView& view) {
  std::vector<std::string> errors;
  for (std::size_t i = 0; i < view.phases.size(); ++i) {
    const auto& ph = view.phases[i];
    for (NodeId v = 0; v < ph.active.size(); ++v) {
      if (!ph.active[v]) continue;
      if (ph.palette[v] < std::min<std::uint32_t>(ph.degree[v] + 1, 3)) {
        errors.push_back("phase " + std::to_string(i + 1) + ": node " + std::to_string(v) + " has " +
                         std::to_string(ph.palette[v]) + " free colors at degree " + std::to_string(ph.degree[v]));
      }
    }
  }
  return errors;
}

std::vector<std::string> check_waiting_hierarchy(const PhaseView& view, const NetworkGraph& g) {
  std::vector<std::string> errors;
  const NodeId n = g.num_nodes();
  const std::size_t phases = view.phases.size();
  auto tag = [](const WaitEvent& w) {
    return "node " + std::to_string(w.node) + " waiting on " + std::to_string(w.target) + " (phase " +
           std::to_string(w.phase) + ")";
  };

  std::vector<std::vector<WaitEvent>> by_node(n);
  for (const auto& w : view.waits) {
    by_node[w.node].push_back(w);
    for (std::uint32_t j = 1; j <= w.phase; ++j) {
      if (!view.phases[j - 1].active[w.target]) {
        errors.push_back(tag(w) + ": target not Active in phase " + std::to_string(j));
        break;
      }
    }
    const bool colored_by_next = view.colored_in[w.target] != 0 && view.colored_in[w.target] <= w.phase;
    if (w.phase < phases && !view.phases[w.phase].active[w.target] && !colored_by_next) {
      errors.push_back(tag(w) + ": target neither Active nor Colored in the next phase");
    }
    std::size_t colored_nb = 0;
    for (NodeId u : g.neighbors(w.node))
      colored_nb += view.colored_in[u] != 0 && view.colored_in[u] < w.phase ? 1 : 0;
    if (colored_nb > 1) errors.push_back(tag(w) + ": more than one colored neighbor at the wait start");
    std::size_t back = w.phase;
    while (back < phases && !view.phases[back].active[w.node]) ++back;
    if (back < phases) {
      // phases[back] is phase back + 1
      if (view.colored_in[w.target] != back) {
        errors.push_back(tag(w) + ": back in phase " + std::to_string(back + 1) + " but the target was colored in phase " +
                         std::to_string(view.colored_in[w.target]));
      } else if (view.phases[back].degree[w.node] != 0) {
        errors.push_back(tag(w) + ": back with nonzero degree");
      }
    }
  }

  // A Waiting neighbor of an Active node waits on it.
  for (std::size_t i = 0; i < phases; ++i) {
    const auto& ph = view.phases[i];
    const auto phase = static_cast<std::uint32_t>(i + 1);
    for (NodeId u = 0; u < n; ++u) {
      if (!ph.active[u]) continue;
      for (NodeId v : g.neighbors(u)) {
        if (ph.active[v] || (view.colored_in[v] != 0 && view.colored_in[v] < phase)) continue;
        const WaitEvent* current = nullptr;
        for (const auto& w : by_node[v])
          if (w.phase < phase) current = &w;
        if (current == nullptr) {
          errors.push_back("phase " + std::to_string(phase) + ": node " + std::to_string(v) +
                           " is neither Active nor Colored and never waited");
        } else if (current->target != u) {
          errors.push_back("phase " + std::to_string(phase) + ": Active node " + std::to_string(u) +
                           " has a Waiting neighbor that waits on another node: " + tag(*current));
        }
      }
    }
  }

  // Acyclicity of the waits-on relation.
  std::vector<std::uint32_t> indegree(n, 0);
  std::vector<std::vector<NodeId>> out(n);
  for (const auto& w : view.waits) {
    out[w.node].push_back(w.target);
    ++indegree[w.target];
  }
  std::queue<NodeId> ready;
  for (NodeId v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push(v);
  std::size_t removed = 0;
  while (!ready.empty()) {
    const NodeId v = ready.front();
    ready.pop();
    ++removed;
    for (NodeId u : out[v])
      if (--indegree[u] == 0) ready.push(u);
  }
  if (removed != n) errors.push_back("the waits-on relation has a cycle");
  return errors;
}

std::vector<GoodNodeSample> good_node_samples(const NetworkGraph& g, const std::vector<bool>& mask) {
  std::vector<GoodNodeSample> samples;
  const NodeId n = g.num_nodes();
  std::vector<std::uint32_t> degree(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    if (!mask[v]) continue;
    for (NodeId u : g.neighbors(v)) degree[v] += mask[u] ? 1 : 0;
  }
  auto good = [&](NodeId v) {
    if (degree[v] <= 1) return true;
    if (degree[v] != 2) return false;
    for (NodeId u : g.neighbors(v))
      if (mask[u] && degree[u] > 2) return false;
    return true;
  };
  std::vector<bool> seen(n, false);
  std::vector<NodeId> stack;
  for (NodeId root = 0; root < n; ++root) {
    if (!mask[root] || seen[root]) continue;
    GoodNodeSample s;
    seen[root] = true;
    stack.push_back(root);
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      ++s.tree_size;
      s.good += good(v) ? 1 : 0;
      for (NodeId u : g.neighbors(v)) {
        if (mask[u] && !seen[u]) {
          seen[u] = true;
          stack.push_back(u);
        }
      }
    }
    samples.push_back(s);
  }
  return samples;
}

std::vector<GoodNodeSample> good_node_samples(const PhaseView& view, const NetworkGraph& g) {
  std::vector<GoodNodeSample> all;
  for (std::size_t i = 0; i < view.phases.size(); ++i) {
    auto s = good_node_samples(g, view.phases[i].never_waited);
    for (auto& x : s) x.phase = static_cast<std::uint32_t>(i + 1);
    all.insert(all.end(), s.begin(), s.end());
  }
  return all;
}

}  // namespace nfsm
