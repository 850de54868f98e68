#include "nfsm/lba.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

#include "nfsm/graph.hpp"
#include "nfsm/protocol_io.hpp"
#include "nfsm/rng.hpp"

namespace nfsm {
namespace {

constexpr Move opposite(Move m) { return m == Move::kLeft ? Move::kRight : Move::kLeft; }
constexpr std::uint32_t bit(Move m) { return m == Move::kLeft ? 0 : 1; }
constexpr std::uint32_t bit(TmVerdict v) { return v == TmVerdict::kAccept ? 0 : 1; }
const char* name(Move m) { return m == Move::kLeft ? "L" : "R"; }
const char* name(TmVerdict v) { return v == TmVerdict::kAccept ? "accept" : "reject"; }

template <class T>
std::optional<std::uint32_t> index_of(const std::vector<T>& names, std::string_view s) {
  auto it = std::find(names.begin(), names.end(), s);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::uint32_t>(it - names.begin());
}

std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

std::optional<SymbolId> TuringMachineSpec::find_symbol(std::string_view name) const { return index_of(alphabet, name); }
std::optional<TmStateId> TuringMachineSpec::find_state(std::string_view name) const { return index_of(states, name); }

std::vector<SymbolId> TuringMachineSpec::tape_for(std::string_view word) const {
  std::vector<SymbolId> tape;
  if (left_marker) tape.push_back(*left_marker);
  for (char ch : word) {
    auto s = find_symbol(std::string_view(&ch, 1));
    if (!s) throw InvalidInput(std::string("symbol '") + ch + "' is not in the alphabet");
    tape.push_back(*s);
  }
  if (right_marker) tape.push_back(*right_marker);
  return tape;
}

std::string TuringMachineSpec::word_of(const std::vector<SymbolId>& tape) const {
  std::string s;
  for (std::size_t i = 0; i < tape.size(); ++i) {
    if ((i == 0 && left_marker && tape[i] == *left_marker) ||
        (i + 1 == tape.size() && right_marker && tape[i] == *right_marker))
      continue;
    s += alphabet.at(tape[i]);
  }
  return s;
}

TuringMachineSpec read_tm(std::istream& in) {
  TuringMachineSpec tm;
  std::vector<std::string> accept_names, reject_names;
  std::string initial_name;
  std::optional<std::pair<std::string, std::string>> markers;
  struct Pending {
    std::size_t line;
    std::vector<std::string> w;
  };
  std::vector<Pending> deltas;

  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) -> ParseError {
    return ParseError("line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto w = words(line);
    if (w.empty()) continue;
    const std::string& kw = w[0];
    std::vector<std::string> args(w.begin() + 1, w.end());
    if (kw == "alphabet") {
      tm.alphabet.insert(tm.alphabet.end(), args.begin(), args.end());
    } else if (kw == "states") {
      tm.states.insert(tm.states.end(), args.begin(), args.end());
    } else if (kw == "markers") {
      if (args.size() != 2) throw fail("markers takes two symbols");
      markers = {args[0], args[1]};
    } else if (kw == "initial") {
      if (args.size() != 1) throw fail("initial takes one state");
      initial_name = args[0];
    } else if (kw == "accept") {
      accept_names.insert(accept_names.end(), args.begin(), args.end());
    } else if (kw == "reject") {
      reject_names.insert(reject_names.end(), args.begin(), args.end());
    } else if (kw == "delta") {
      if (args.size() != 6 || args[2] != "->") throw fail("expected: delta <state> <symbol> -> <state> <symbol> <L|R>");
      deltas.push_back({lineno, args});
    } else {
      throw fail("unknown declaration '" + kw + "'");
    }
  }

  auto check_unique = [](const std::vector<std::string>& v, const char* what) {
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ParseError(std::string("duplicate ") + what + " name");
  };
  check_unique(tm.alphabet, "symbol");
  check_unique(tm.states, "state");
  if (tm.states.empty()) throw ParseError("no states declared");
  if (tm.alphabet.empty()) throw ParseError("no symbols declared");

  auto state = [&](const std::string& s, std::size_t at) {
    auto id = tm.find_state(s);
    if (!id) throw ParseError("line " + std::to_string(at) + ": unknown state '" + s + "'");
    return *id;
  };
  auto symbol = [&](const std::string& s, std::size_t at) {
    auto id = tm.find_symbol(s);
    if (!id) throw ParseError("line " + std::to_string(at) + ": unknown symbol '" + s + "'");
    return *id;
  };

  if (initial_name.empty()) throw ParseError("no initial state declared");
  tm.initial = state(initial_name, 0);
  tm.accept.assign(tm.states.size(), false);
  tm.reject.assign(tm.states.size(), false);
  for (const auto& s : accept_names) tm.accept[state(s, 0)] = true;
  for (const auto& s : reject_names) tm.reject[state(s, 0)] = true;
  if (markers) {
    tm.left_marker = symbol(markers->first, 0);
    tm.right_marker = symbol(markers->second, 0);
  }
  tm.delta.assign(tm.states.size() * tm.alphabet.size(), {});
  for (const auto& d : deltas) {
    const auto& a = d.w;
    TmTransition t{state(a[3], d.line), symbol(a[4], d.line), Move::kLeft};
    if (a[5] == "R") {
      t.move = Move::kRight;
    } else if (a[5] != "L") {
      throw ParseError("line " + std::to_string(d.line) + ": move must be L or R");
    }
    auto& outs = tm.transitions(state(a[0], d.line), symbol(a[1], d.line));
    if (std::find(outs.begin(), outs.end(), t) == outs.end()) outs.push_back(t);
  }
  return tm;
}

TuringMachineSpec load_tm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_tm(in);
}

void write_tm(std::ostream& out, const TuringMachineSpec& tm) {
  auto list = [&](const char* kw, const std::vector<std::string>& names, const std::vector<bool>* mask) {
    out << kw;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (mask == nullptr || (*mask)[i]) out << ' ' << names[i];
    out << '\n';
  };
  list("alphabet", tm.alphabet, nullptr);
  if (tm.left_marker && tm.right_marker)
    out << "markers " << tm.alphabet[*tm.left_marker] << ' ' << tm.alphabet[*tm.right_marker] << '\n';
  list("states", tm.states, nullptr);
  out << "initial " << tm.states[tm.initial] << '\n';
  list("accept", tm.states, &tm.accept);
  list("reject", tm.states, &tm.reject);
  for (TmStateId p = 0; p < tm.num_states(); ++p) {
    for (SymbolId g = 0; g < tm.num_symbols(); ++g) {
      for (const auto& t : tm.transitions(p, g)) {
        out << "delta " << tm.states[p] << ' ' << tm.alphabet[g] << " -> " << tm.states[t.next] << ' '
            << tm.alphabet[t.write] << ' ' << name(t.move) << '\n';
      }
    }
  }
}

ValidationReport validate_tm(const TuringMachineSpec& tm) {
  ValidationReport report;
  auto& v = report.violations;
  const std::size_t G = tm.num_symbols();
  const std::size_t P = tm.num_states();
  if (G == 0) v.push_back("alphabet is empty");
  if (P == 0) v.push_back("state set is empty");
  if (tm.initial >= P) v.push_back("initial state is out of range");
  if (tm.accept.size() != P || tm.reject.size() != P || tm.delta.size() != P * G) {
    v.push_back("tables do not match the state and symbol counts");
    return report;
  }
  if (tm.left_marker.has_value() != tm.right_marker.has_value()) v.push_back("only one end marker declared");
  const bool marked = tm.left_marker && tm.right_marker;
  if (marked && (*tm.left_marker >= G || *tm.right_marker >= G)) {
    v.push_back("end marker out of range");
    return report;
  }
  if (marked && *tm.left_marker == *tm.right_marker) v.push_back("end markers must differ");
  auto is_marker = [&](SymbolId g) { return marked && (g == *tm.left_marker || g == *tm.right_marker); };

  for (TmStateId p = 0; p < P; ++p) {
    if (tm.accept[p] && tm.reject[p]) v.push_back("state '" + tm.states[p] + "' both accepts and rejects");
    for (SymbolId g = 0; g < G; ++g) {
      const auto& outs = tm.transitions(p, g);
      const std::string where = "(" + tm.states[p] + ", " + tm.alphabet[g] + ")";
      if (tm.halting(p)) {
        if (!outs.empty()) v.push_back("halting pair " + where + " has transitions");
        continue;
      }
      if (outs.empty()) v.push_back("no transition at " + where);
      for (const auto& t : outs) {
        if (t.next >= P || t.write >= G) {
          v.push_back("transition at " + where + " is out of range");
          continue;
        }
        if (!marked) {
          v.push_back("transition at " + where + " moves the head on a tape without end markers");
        } else if (g == *tm.left_marker) {
          if (t.move != Move::kRight || t.write != g) v.push_back("transition at " + where + " leaves the tape or erases the marker");
        } else if (g == *tm.right_marker) {
          if (t.move != Move::kLeft || t.write != g) v.push_back("transition at " + where + " leaves the tape or erases the marker");
        } else if (is_marker(t.write)) {
          v.push_back("transition at " + where + " writes an end marker");
        }
      }
    }
  }
  return report;
}

namespace {

void check_tape(const TuringMachineSpec& tm, const std::vector<SymbolId>& tape) {
  if (tape.empty()) throw InvalidInput("tape is empty");
  for (SymbolId g : tape)
    if (g >= tm.num_symbols()) throw InvalidInput("tape symbol out of range");
  if (tm.left_marker && tm.right_marker) {
    if (tape.size() < 2 || tape.front() != *tm.left_marker || tape.back() != *tm.right_marker)
      throw InvalidInput("tape must start and end with the end markers");
    for (std::size_t i = 1; i + 1 < tape.size(); ++i) {
      if (tape[i] == *tm.left_marker || tape[i] == *tm.right_marker)
        throw InvalidInput("end marker inside the tape");
    }
  }
}

}  // namespace

TmRun run_tm_oracle(const TuringMachineSpec& tm, const std::vector<SymbolId>& tape, std::uint64_t seed,
                    std::uint64_t max_steps) {
  require_valid(validate_tm(tm), "machine");
  check_tape(tm, tape);
  TmRun run;
  run.tape = tape;
  TmStateId p = tm.initial;
  while (!tm.halting(p)) {
    if (run.steps >= max_steps) throw StepCapExceeded("machine did not halt within " + std::to_string(max_steps) + " steps");
    const SymbolId g = run.tape[run.head];
    const auto& outs = tm.transitions(p, g);
    const std::size_t pick = outs.size() == 1 ? 0 : uniform_below(draw_word(seed, kTmChoiceStream, run.steps), outs.size());
    const TmTransition t = outs[pick];
    run.history.push_back({run.head, p, g, t});
    run.tape[run.head] = t.write;
    if (t.move == Move::kLeft) {
      if (run.head == 0) throw InvalidMachine("head moved off the left end");
      --run.head;
    } else {
      if (run.head + 1 == run.tape.size()) throw InvalidMachine("head moved off the right end");
      ++run.head;
    }
    p = t.next;
    ++run.steps;
  }
  run.verdict = tm.accept[p] ? TmVerdict::kAccept : TmVerdict::kReject;
  return run;
}

// State layout, G = |Gamma|, P = |P|: idle, handoff, cooldown at 2g + dir within blocks of
// 2G; then head at g * P + p; then halted at 2g + verdict.
StateId RlbaCompilation::idle(SymbolId g, Move dir) const { return 2 * g + bit(dir); }
StateId RlbaCompilation::head(SymbolId g, TmStateId p) const {
  return static_cast<StateId>(6 * tm.num_symbols() + g * tm.num_states() + p);
}
StateId RlbaCompilation::halted(SymbolId g, TmVerdict v) const {
  return static_cast<StateId>(6 * tm.num_symbols() + tm.num_symbols() * tm.num_states() + 2 * g + bit(v));
}
LetterId RlbaCompilation::move_letter(Move m, TmStateId p) const {
  return static_cast<LetterId>(bit(m) * tm.num_states() + p);
}
LetterId RlbaCompilation::halt_letter(TmVerdict v) const { return static_cast<LetterId>(2 * tm.num_states() + bit(v)); }

std::vector<StateId> RlbaCompilation::input_states(const std::vector<SymbolId>& tape) const {
  check_tape(tm, tape);
  std::vector<StateId> in(tape.size());
  for (std::size_t i = 0; i < tape.size(); ++i) in[i] = i == 0 ? head(tape[0], tm.initial) : idle(tape[i], Move::kLeft);
  return in;
}

std::vector<SymbolId> RlbaCompilation::tape_of(std::span<const StateId> states) const {
  std::vector<SymbolId> tape(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) tape[i] = state_info.at(states[i]).symbol;
  return tape;
}

std::optional<TmVerdict> RlbaCompilation::verdict_of(std::span<const StateId> states) const {
  std::optional<TmVerdict> v;
  for (StateId q : states) {
    const auto& info = state_info.at(q);
    if (info.kind != RlbaNodeKind::kHalted || (v && *v != info.verdict)) return std::nullopt;
    v = info.verdict;
  }
  return v;
}

ChoiceKeyFn RlbaCompilation::key_fn() const {
  auto counter = std::make_shared<std::uint64_t>(0);
  std::vector<bool> stepping(state_info.size(), false);
  for (StateId q = 0; q < state_info.size(); ++q)
    stepping[q] = state_info[q].kind == RlbaNodeKind::kHead && !tm.halting(state_info[q].p);
  return [counter, stepping = std::move(stepping)](NodeId, std::uint64_t, StateId q) {
    if (!stepping[q]) return DrawKey{kTmChoiceStream + 1, 0};
    return DrawKey{kTmChoiceStream, (*counter)++};
  };
}

RlbaCompilation compile_rlba(const TuringMachineSpec& tm) {
  auto report = validate_tm(tm);
  if (!report.ok()) {
    std::string msg = "machine is invalid:";
    for (const auto& s : report.violations) msg += "\n  " + s;
    throw InvalidMachine(msg);
  }
  const std::size_t G = tm.num_symbols();
  const std::size_t P = tm.num_states();

  RlbaCompilation c{tm, MultiLetterProtocol(NameTable{}, 0, 1, {}), {}};
  NameTable letters;
  for (Move m : {Move::kLeft, Move::kRight})
    for (TmStateId p = 0; p < P; ++p) letters.add(std::string(name(m)) + "." + tm.states[p]);
  letters.add("halt.accept");
  letters.add("halt.reject");

  const std::size_t num_states = 6 * G + G * P + 2 * G;
  std::vector<MultiLetterState> states(num_states);
  c.state_info.resize(num_states);
  const LetterId halt_a = c.halt_letter(TmVerdict::kAccept);
  const LetterId halt_r = c.halt_letter(TmVerdict::kReject);
  auto no_halt = [=](const CountView& v) { return v.zero(halt_a) && v.zero(halt_r); };

  // Every state outside the head follows a halt letter first.
  auto add_halt_rules = [&](MultiLetterState& s, SymbolId g) {
    s.observed = {halt_a, halt_r};
    s.rules.push_back({"halt.accept", [=](const CountView& v) { return v.present(halt_a); },
                       {{c.halted(g, TmVerdict::kAccept), halt_a}}});
    s.rules.push_back({"halt.reject", [=](const CountView& v) { return v.zero(halt_a) && v.present(halt_r); },
                       {{c.halted(g, TmVerdict::kReject), halt_r}}});
  };

  for (SymbolId g = 0; g < G; ++g) {
    const std::string sym = tm.alphabet[g];
    for (Move d : {Move::kLeft, Move::kRight}) {
      const std::string suffix = sym + "." + name(d);
      const StateId idle = c.idle(g, d);
      const StateId handoff = static_cast<StateId>(2 * G + idle);
      const StateId cooldown = static_cast<StateId>(4 * G + idle);

      auto& si = states[idle];
      si.name = "idle." + suffix;
      si.input = d == Move::kLeft;
      c.state_info[idle] = {RlbaNodeKind::kIdle, g, d, 0, TmVerdict::kReject};
      add_halt_rules(si, g);
      // The head arrives from the side it was on, carrying its state.
      const Move arriving = opposite(d);
      std::vector<LetterId> movers;
      for (TmStateId p = 0; p < P; ++p) movers.push_back(c.move_letter(arriving, p));
      si.observed.insert(si.observed.end(), movers.begin(), movers.end());
      for (TmStateId p = 0; p < P; ++p) {
        si.rules.push_back({"activate." + tm.states[p],
                            [=](const CountView& v) {
                              if (!no_halt(v) || v.zero(movers[p])) return false;
                              for (TmStateId e = 0; e < p; ++e)
                                if (v.present(movers[e])) return false;
                              return true;
                            },
                            {{c.head(g, p), kEpsilon}}});
      }
      si.rules.push_back({"listen",
                          [=](const CountView& v) {
                            return no_halt(v) && std::all_of(movers.begin(), movers.end(),
                                                             [&](LetterId l) { return v.zero(l); });
                          },
                          {{idle, kEpsilon}}});

      auto& sh = states[handoff];
      sh.name = "handoff." + suffix;
      c.state_info[handoff] = {RlbaNodeKind::kHandoff, g, d, 0, TmVerdict::kReject};
      add_halt_rules(sh, g);
      sh.rules.push_back({"settle", no_halt, {{cooldown, kEpsilon}}});

      auto& sc = states[cooldown];
      sc.name = "cooldown." + suffix;
      c.state_info[cooldown] = {RlbaNodeKind::kCooldown, g, d, 0, TmVerdict::kReject};
      add_halt_rules(sc, g);
      sc.rules.push_back({"settle", no_halt, {{idle, kEpsilon}}});
    }

    for (TmStateId p = 0; p < P; ++p) {
      const StateId q = c.head(g, p);
      auto& s = states[q];
      s.name = "head." + sym + "." + tm.states[p];
      s.input = p == tm.initial;
      c.state_info[q] = {RlbaNodeKind::kHead, g, Move::kLeft, p, TmVerdict::kReject};
      if (tm.halting(p)) {
        const TmVerdict v = tm.accept[p] ? TmVerdict::kAccept : TmVerdict::kReject;
        s.rules.push_back({"halt", [](const CountView&) { return true; }, {{c.halted(g, v), c.halt_letter(v)}}});
        continue;
      }
      std::vector<Outcome> outs;
      for (const auto& t : tm.transitions(p, g)) {
        outs.push_back({static_cast<StateId>(2 * G + c.idle(t.write, t.move)), c.move_letter(t.move, t.next)});
      }
      s.rules.push_back({"step", [](const CountView&) { return true; }, std::move(outs)});
    }

    for (TmVerdict v : {TmVerdict::kAccept, TmVerdict::kReject}) {
      const StateId q = c.halted(g, v);
      auto& s = states[q];
      s.name = "halted." + sym + "." + name(v);
      s.output = true;
      c.state_info[q] = {RlbaNodeKind::kHalted, g, Move::kLeft, 0, v};
      s.rules.push_back({"absorbing", [](const CountView&) { return true; }, {{q, kEpsilon}}});
    }
  }

  const LetterId initial = c.move_letter(Move::kLeft, tm.initial);
  c.protocol = MultiLetterProtocol(std::move(letters), initial, 1, std::move(states));
  return c;
}

RlbaRun run_compiled_rlba(const RlbaCompilation& c, const std::vector<SymbolId>& tape, std::uint64_t seed,
                          TraceMode mode, std::uint64_t max_rounds) {
  const auto inputs = c.input_states(tape);
  std::vector<Edge> edges;
  for (NodeId i = 0; i + 1 < tape.size(); ++i) edges.push_back({i, i + 1});
  const auto g = NetworkGraph::from_edges(static_cast<NodeId>(tape.size()), edges);
  RunOptions opts;
  opts.trace = mode;
  opts.key_fn = c.key_fn();
  opts.max_events = max_rounds * tape.size();
  RlbaRun run;
  run.result = run_sync(c.protocol, g, inputs, seed, opts);
  run.verdict = c.verdict_of(run.result.output_states);
  run.tape = c.tape_of(run.result.output_states);
  return run;
}

RlbaComparison run_both(const RlbaCompilation& c, const std::vector<SymbolId>& tape, std::uint64_t seed,
                        TraceMode mode) {
  RlbaComparison cmp;
  cmp.oracle = run_tm_oracle(c.tm, tape, seed);
  cmp.compiled = run_compiled_rlba(c, tape, seed, mode);
  std::ostringstream diff;
  if (!cmp.compiled.verdict) {
    diff << "compiled run ended without a common verdict";
  } else if (*cmp.compiled.verdict != cmp.oracle.verdict) {
    diff << "verdict: oracle " << name(cmp.oracle.verdict) << ", compiled " << name(*cmp.compiled.verdict);
  } else {
    for (std::size_t i = 0; i < tape.size(); ++i) {
      if (cmp.compiled.tape[i] != cmp.oracle.tape[i]) {
        diff << "cell " << i << ": oracle " << c.tm.alphabet[cmp.oracle.tape[i]] << ", compiled "
             << c.tm.alphabet[cmp.compiled.tape[i]];
        break;
      }
    }
  }
  cmp.difference = diff.str();
  cmp.equal = cmp.difference.empty();
  return cmp;
}

std::vector<std::string> check_rlba_invariants(const RlbaCompilation& c, const ExecutionTrace& t, const TmRun& oracle) {
  std::vector<std::string> errors;
  if (t.mode != TraceMode::kFull) return {"trace was recorded without events"};
  const auto rows = state_history(t);
  auto report = [&](std::size_t config, const std::string& what) {
    if (errors.size() < 50) errors.push_back("configuration " + std::to_string(config) + ": " + what);
  };

  std::vector<SymbolId> tape = rows[0].empty() ? std::vector<SymbolId>{} : c.tape_of(rows[0]);
  std::uint32_t position = 0;
  std::uint64_t k = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (r > 0) {
      for (NodeId v = 0; v < row.size(); ++v) {
        const auto& before = c.state_info[rows[r - 1][v]];
        if (before.kind != RlbaNodeKind::kHead || c.tm.halting(before.p)) continue;
        if (k >= oracle.history.size()) {
          report(r, "head step beyond the oracle's " + std::to_string(oracle.history.size()) + " steps");
          continue;
        }
        const auto& step = oracle.history[k];
        if (v != step.head || before.p != step.state || before.symbol != step.read) {
          report(r, "head step " + std::to_string(k) + " at node " + std::to_string(v) + " differs from the oracle");
        }
        tape[step.head] = step.taken.write;
        position = step.taken.move == Move::kLeft ? step.head - 1 : step.head + 1;
        ++k;
      }
    }
    if (c.tape_of(row) != tape) report(r, "tape differs from the oracle after " + std::to_string(k) + " steps");

    std::size_t holders = 0;
    bool halted = false;
    for (StateId q : row) {
      const auto kind = c.state_info[q].kind;
      holders += kind == RlbaNodeKind::kHead || kind == RlbaNodeKind::kHandoff ? 1 : 0;
      halted = halted || kind == RlbaNodeKind::kHalted;
    }
    if (halted ? holders != 0 : holders != 1) {
      report(r, std::to_string(holders) + " nodes hold the head" + (halted ? " after the halt" : ""));
    }
    if (halted) continue;
    for (NodeId v = 0; v < row.size(); ++v) {
      if (v == position) continue;
      const auto& info = c.state_info[row[v]];
      if (info.kind == RlbaNodeKind::kHead) continue;
      const Move expected = v < position ? Move::kRight : Move::kLeft;
      if (info.dir != expected) report(r, "node " + std::to_string(v) + " points away from the head");
    }
  }
  if (k != oracle.steps) {
    errors.push_back("compiled run took " + std::to_string(k) + " head steps, oracle " + std::to_string(oracle.steps));
  }
  return errors;
}

}  // namespace nfsm
