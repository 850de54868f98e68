// nfsm: run, verify and compile networked finite-state machine protocols.
//
// Exit codes: 0 success, 1 a verifier or comparison failed, 2 bad input or usage.

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "nfsm/adversary.hpp"
#include "nfsm/coloring.hpp"
#include "nfsm/engine.hpp"
#include "nfsm/experiment.hpp"
#include "nfsm/generators.hpp"
#include "nfsm/lba.hpp"
#include "nfsm/mis.hpp"
#include "nfsm/multi_letter_compiler.hpp"
#include "nfsm/pipeline.hpp"
#include "nfsm/protocol_io.hpp"
#include "nfsm/stats.hpp"
#include "nfsm/synchronizer.hpp"
#include "nfsm/trace.hpp"

namespace {

using namespace nfsm;

constexpr int kFailed = 1;
constexpr int kBadInput = 2;

struct GraphArgs {
  std::string file;
  std::string family;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::optional<double> p;
  std::optional<double> avg_degree;
  std::optional<std::size_t> width;

  void add_to(CLI::App* app) {
    app->add_option("--graph", file, "Graph file (`n m` then `u v` lines)");
    app->add_option("--family", family, "path|cycle|star|complete|gnp|random-tree|grid");
    app->add_option("-n,--nodes", n, "Node count for --family");
    app->add_option("--graph-seed", seed, "Generator seed for --family");
    app->add_option("--edge-p", p, "gnp edge probability");
    app->add_option("--avg-degree", avg_degree, "gnp expected degree");
    app->add_option("--width", width, "grid row length");
  }

  GraphSpec spec() const {
    GraphSpec s;
    s.family = parse_family(family);
    s.n = n;
    s.seed = seed;
    s.p = p;
    s.avg_degree = avg_degree;
    s.width = width;
    return s;
  }

  NetworkGraph load() const {
    if (!file.empty()) return load_graph(file);
    if (family.empty()) throw InvalidInput("give --graph or --family");
    return generate_graph(spec());
  }
};

void write_states(std::ostream& out, const MultiLetterProtocol& p, std::span<const StateId> states) {
  for (std::size_t v = 0; v < states.size(); ++v) out << v << ' ' << p.state_name(states[v]) << '\n';
}

/// `v token` per line; tokens are state names, or 0/1 (MIS membership) and 1..3 (colors).
std::vector<std::string> read_assignment(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::string> tokens(n);
  std::vector<bool> seen(n, false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long long v = -1;
    std::string tok;
    if (!(ls >> v >> tok) || v < 0 || static_cast<std::size_t>(v) >= n)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected `<node> <value>` with node < " +
                       std::to_string(n));
    tokens[v] = tok;
    seen[v] = true;
  }
  for (std::size_t v = 0; v < n; ++v)
    if (!seen[v]) throw ParseError(path + ": no value for node " + std::to_string(v));
  return tokens;
}

Verdict verify_assignment(const std::string& protocol, const NetworkGraph& g, const std::vector<std::string>& tokens) {
  const ProtocolEntry entry = protocol_entry(protocol);
  std::vector<StateId> states;
  bool named = true;
  for (const auto& t : tokens) named = named && entry.protocol.find_state(t).has_value();
  if (named) {
    for (const auto& t : tokens) states.push_back(*entry.protocol.find_state(t));
    return entry.verify(g, states);
  }
  if (protocol == "mis") {
    std::vector<bool> in(tokens.size());
    for (std::size_t v = 0; v < tokens.size(); ++v) {
      if (tokens[v] != "0" && tokens[v] != "1") throw ParseError("MIS value must be 0, 1 or a state name");
      in[v] = tokens[v] == "1";
    }
    return verify_mis(g, in);
  }
  std::vector<std::uint8_t> colors(tokens.size());
  for (std::size_t v = 0; v < tokens.size(); ++v) {
    if (tokens[v].size() != 1 || tokens[v][0] < '0' || tokens[v][0] > '9')
      throw ParseError("color must be a digit or a state name");
    colors[v] = static_cast<std::uint8_t>(tokens[v][0] - '0');
  }
  return verify_coloring(g, colors);
}

int report(const Verdict& v) {
  if (v.ok) {
    std::cout << "ok\n";
    return 0;
  }
  std::cout << "FAIL: " << v.message;
  if (!v.witness.empty()) {
    std::cout << " (witness";
    for (NodeId u : v.witness) std::cout << ' ' << u;
    std::cout << ')';
  }
  std::cout << '\n';
  return kFailed;
}

void export_stats(const std::string& protocol, const ExecutionTrace& t, const NetworkGraph& g, const std::string& prefix) {
  if (protocol == "mis") {
    const auto view = analyze_tournaments(t);
    std::ofstream tl(prefix + "tournaments.csv");
    tl << "node,tournament,turns,up_turns,last,length\n";
    for (NodeId v = 0; v < view.nodes.size(); ++v) {
      const auto& ts = view.nodes[v].tournaments;
      for (std::size_t i = 0; i < ts.size(); ++i)
        tl << v << ',' << i + 1 << ',' << ts[i].num_turns << ',' << ts[i].up_turns << ',' << ts[i].last << ','
           << ts[i].length << '\n';
    }
    std::ofstream es(prefix + "edges.csv");
    es << "tournament,edges\n";
    const auto series = edge_series(view, g);
    for (std::size_t i = 0; i < series.size(); ++i) es << i + 1 << ',' << series[i] << '\n';
  } else {
    const auto view = analyze_phases(t, g);
    std::ofstream ps(prefix + "phases.csv");
    ps << "phase,active,never_waited\n";
    for (std::size_t i = 0; i < view.phases.size(); ++i) {
      const auto& ph = view.phases[i];
      std::size_t nw = 0;
      for (bool b : ph.never_waited) nw += b;
      ps << i + 1 << ',' << ph.num_active << ',' << nw << '\n';
    }
  }
}

int cmd_gen_graph(const GraphArgs& ga, const std::string& out) {
  const NetworkGraph g = generate_graph(ga.spec());
  if (out.empty() || out == "-") {
    write_graph(std::cout, g);
  } else {
    save_graph(out, g);
  }
  return 0;
}

struct RunArgs {
  std::string protocol = "mis";
  std::string mode = "sync";
  std::string adversary = "lockstep";
  std::string input;
  std::uint64_t seed = 1;
  std::uint64_t max_events = 400'000'000;
  std::string trace_out;
  bool binary = false;
  std::string outputs_out;
  std::string stats_prefix;
};

int cmd_run(const RunArgs& a, const GraphArgs& ga) {
  const NetworkGraph g = ga.load();
  const bool builtin = a.protocol == "mis" || a.protocol == "coloring";
  RunOptions opts;
  opts.max_events = a.max_events;
  opts.throw_on_cap = false;
  const bool want_trace = !a.trace_out.empty() || !a.stats_prefix.empty();
  if (want_trace) opts.trace = TraceMode::kFull;
  RunResult r;
  std::optional<Verdict> verdict;

  if (builtin) {
    const ProtocolEntry entry = protocol_entry(a.protocol);
    const auto inputs = uniform_inputs(g, entry.input);
    std::vector<StateId> outputs;
    if (a.mode == "sync") {
      r = run_sync(entry.protocol, g, inputs, a.seed, opts);
      outputs = r.output_states;
    } else {
      const Pipeline pl = build_pipeline(entry.protocol);
      r = run_pipeline(pl, g, inputs, *make_adversary(a.adversary), a.seed, opts);
      if (r.report.reached_output) outputs = pl.source_states(r.output_states);
    }
    if (r.report.reached_output) {
      verdict = entry.verify(g, outputs);
      if (!a.outputs_out.empty()) {
        std::ofstream out(a.outputs_out);
        write_states(out, entry.protocol, outputs);
      }
    }
    if (!a.stats_prefix.empty() && a.mode == "sync" && r.report.reached_output)
      export_stats(a.protocol, r.trace, g, a.stats_prefix);
  } else {
    const AnyProtocol any = load_protocol_file(a.protocol);
    auto pick_input = [&](const auto& p) -> StateId {
      if (!a.input.empty()) {
        auto q = p.find_state(a.input);
        if (!q) throw InvalidInput("no state named '" + a.input + "'");
        return *q;
      }
      for (StateId q = 0; q < p.num_states(); ++q)
        if (p.is_input(q)) return q;
      throw InvalidInput("protocol declares no input state");
    };
    std::visit(
        [&](const auto& p) {
          const auto inputs = uniform_inputs(g, pick_input(p));
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, Protocol>) {
            if (a.mode == "sync") {
              r = run_sync(p, g, inputs, a.seed, opts);
            } else {
              r = run_async(p, g, inputs, *make_adversary(a.adversary), a.seed, opts);
            }
          } else {
            if (a.mode != "sync") throw InvalidInput("multi-letter protocols run in sync mode; compile them first");
            r = run_sync(p, g, inputs, a.seed, opts);
          }
          if (!a.outputs_out.empty() && r.report.reached_output) {
            std::ofstream out(a.outputs_out);
            for (std::size_t v = 0; v < r.output_states.size(); ++v)
              out << v << ' ' << p.state_name(r.output_states[v]) << '\n';
          }
        },
        any);
  }
  if (!a.trace_out.empty()) save_trace(a.trace_out, r.trace, a.binary);

  std::cout << "nodes " << g.num_nodes() << " edges " << g.num_edges() << '\n';
  if (!r.report.reached_output) {
    std::cout << "no output configuration within " << a.max_events << " events\n";
    return kFailed;
  }
  std::cout << (a.mode == "sync" ? "rounds " : "run-time ") << r.report.run_time << '\n'
            << "events " << r.report.events << '\n'
            << "trace-hash " << hash_hex(r.trace.hash) << '\n';
  if (!verdict) return 0;
  return report(*verdict);
}

int cmd_verify(const std::string& protocol, const GraphArgs& ga, const std::string& outputs, const std::string& trace,
               const std::string& stats_prefix) {
  const NetworkGraph g = ga.load();
  if (!trace.empty()) {
    const ExecutionTrace t = load_trace(trace);
    if (!stats_prefix.empty()) export_stats(protocol, t, g, stats_prefix);
    std::vector<std::string> errors;
    if (protocol == "mis") {
      const auto view = analyze_tournaments(t);
      errors = view.errors;
      for (auto& e : check_win_lose(view, g)) errors.push_back(std::move(e));
    } else {
      const auto view = analyze_phases(t, g);
      errors = view.errors;
      for (auto& e : check_palettes(view)) errors.push_back(std::move(e));
      for (auto& e : check_waiting_hierarchy(view, g)) errors.push_back(std::move(e));
    }
    for (const auto& e : errors) std::cout << "trace: " << e << '\n';
    if (!errors.empty()) return kFailed;
    std::cout << "trace ok\n";
  }
  if (outputs.empty()) return 0;
  return report(verify_assignment(protocol, g, read_assignment(outputs, g.num_nodes())));
}

void write_subround_annotations(std::ostream& out, const MultiLetterCompilation& c) {
  out << "lowered " << c.subrounds << '\n';
  for (StateId q = 0; q < c.annotations.size(); ++q) {
    const auto& a = c.annotations[q];
    out << "state " << q << ' ' << a.source << ' ' << a.subround;
    for (auto x : a.partial) out << ' ' << static_cast<int>(x);
    out << '\n';
  }
}

int cmd_compile(const std::string& in, const std::string& out, const std::string& sidecar, const std::string& stage) {
  AnyProtocol any;
  if (in == "mis" || in == "coloring") {
    any = protocol_entry(in).protocol;
  } else {
    any = load_protocol_file(in);
  }
  std::ofstream side;
  if (!sidecar.empty()) {
    side.open(sidecar);
    if (!side) throw Error("cannot write " + sidecar);
  }
  Protocol single;
  if (auto* ml = std::get_if<MultiLetterProtocol>(&any)) {
    auto lowered = compile_multi_letter(*ml);
    std::cerr << "lowered: " << lowered.protocol.num_states() << " states\n";
    if (!sidecar.empty()) {
      // The synchronizer sidecar stays readable by read_annotations; the subround map
      // goes next to it.
      std::ofstream low(sidecar + ".lowered");
      write_subround_annotations(low, lowered);
    }
    single = std::move(lowered.protocol);
    if (stage == "lower") {
      save_protocol_file(out, single);
      return 0;
    }
  } else {
    single = std::get<Protocol>(std::move(any));
    if (stage == "lower") throw InvalidInput("the protocol is already single-letter");
  }
  const CompiledProtocol cp = compile_synchronizer(single);
  std::cerr << "synchronized: " << cp.protocol.num_states() << " states, " << cp.protocol.num_letters()
            << " letters\n";
  if (side) write_annotations(side, cp);
  save_protocol_file(out, cp.protocol);
  return 0;
}

int cmd_experiment(const std::string& config, std::optional<std::size_t> threads, const std::string& replay) {
  if (!replay.empty()) {
    std::ifstream in(replay);
    if (!in) throw ParseError("cannot open " + replay);
    const auto records = read_records_json(in);
    std::size_t same = 0;
    for (const auto& r : records) {
      const auto again = replay_record(r);
      if (again.trace_hash == r.trace_hash && again.rounds == r.rounds) {
        ++same;
      } else {
        std::cout << "differs: " << r.graph.describe() << " seed " << r.seed << " " << r.adversary << '\n';
      }
    }
    std::cout << same << "/" << records.size() << " records replayed identically\n";
    return same == records.size() ? 0 : kFailed;
  }
  ExperimentConfig c = load_experiment_config(config);
  if (threads) c.threads = *threads;
  try {
    const auto records = run_experiment(c);
    std::map<std::size_t, std::vector<double>> by_n;
    for (const auto& r : records) by_n[r.graph.n].push_back(r.rounds);
    std::cout << "n,runs,median_rounds\n";
    for (auto& [n, xs] : by_n) std::cout << n << ',' << xs.size() << ',' << median(xs) << '\n';
    std::cout << records.size() << " runs verified\n";
  } catch (const VerifierFailure& e) {
    std::cout << "FAIL: " << e.what() << '\n';
    return kFailed;
  }
  return 0;
}

std::vector<std::string> all_words(const TuringMachineSpec& tm, std::size_t max_len) {
  std::vector<std::string> symbols;
  for (SymbolId s = 0; s < tm.alphabet.size(); ++s) {
    if (s == tm.left_marker || s == tm.right_marker) continue;
    symbols.push_back(tm.alphabet[s]);
  }
  std::vector<std::string> words, frontier{""};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const auto& w : frontier)
      for (const auto& s : symbols) next.push_back(w + s);
    words.insert(words.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return words;
}

int cmd_lba(const std::string& action, const std::string& tm_path, const std::string& word, std::uint64_t seed,
            std::size_t max_len, const std::string& out) {
  const TuringMachineSpec tm = load_tm(tm_path);
  const auto valid = validate_tm(tm);
  if (!valid.ok()) {
    for (const auto& v : valid.violations) std::cerr << tm_path << ": " << v << '\n';
    return kBadInput;
  }
  const RlbaCompilation c = compile_rlba(tm);
  if (action == "compile") {
    save_protocol_file(out.empty() ? "/dev/stdout" : out, c.protocol);
    std::cerr << c.protocol.num_states() << " states\n";
    return 0;
  }
  auto verdict_name = [](std::optional<TmVerdict> v) {
    return !v ? "none" : *v == TmVerdict::kAccept ? "accept" : "reject";
  };
  if (action == "run-both") {
    const auto cmp = run_both(c, tm.tape_for(word), seed);
    std::cout << "oracle   " << verdict_name(cmp.oracle.verdict) << ' ' << tm.word_of(cmp.oracle.tape) << " ("
              << cmp.oracle.steps << " steps)\n"
              << "compiled " << verdict_name(cmp.compiled.verdict) << ' ' << tm.word_of(cmp.compiled.tape) << " ("
              << cmp.compiled.result.report.run_time << " rounds)\n";
    if (!cmp.equal) std::cout << "differ: " << cmp.difference << '\n';
    return cmp.equal ? 0 : kFailed;
  }
  // diff: every word up to max_len, one seed each.
  std::size_t bad = 0;
  const auto words = all_words(tm, max_len);
  for (const auto& w : words) {
    const auto cmp = run_both(c, tm.tape_for(w), seed);
    if (!cmp.equal) {
      ++bad;
      std::cout << "'" << w << "': " << cmp.difference << '\n';
    }
  }
  std::cout << words.size() - bad << "/" << words.size() << " inputs agree\n";
  return bad == 0 ? 0 : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Networked finite-state machine simulator"};
  app.require_subcommand(1);

  GraphArgs gen_ga;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-graph", "Generate a graph file");
  gen_ga.add_to(gen);
  gen->add_option("-o,--output", gen_out, "Output file (default stdout)");

  RunArgs ra;
  GraphArgs run_ga;
  auto* run = app.add_subcommand("run", "Run one protocol on one graph");
  run->add_option("-p,--protocol", ra.protocol, "mis, coloring, or a protocol file");
  run->add_option("--mode", ra.mode, "sync or async")->check(CLI::IsMember({"sync", "async"}));
  run->add_option("--adversary", ra.adversary, "Adversary spec for async runs");
  run->add_option("--input", ra.input, "Input state for protocol files");
  run->add_option("-s,--seed", ra.seed, "Randomness seed");
  run->add_option("--max-events", ra.max_events, "Event cap");
  run->add_option("--trace", ra.trace_out, "Write the full trace here");
  run->add_flag("--binary", ra.binary, "Binary trace format");
  run->add_option("--outputs", ra.outputs_out, "Write `node state` lines here");
  run->add_option("--stats", ra.stats_prefix, "CSV prefix for tournament/edge/phase statistics (sync)");
  run_ga.add_to(run);

  std::string v_protocol = "mis", v_outputs, v_trace, v_stats;
  GraphArgs v_ga;
  auto* verify = app.add_subcommand("verify", "Check an output assignment or a trace");
  verify->add_option("-p,--protocol", v_protocol)->check(CLI::IsMember({"mis", "coloring"}));
  verify->add_option("--outputs", v_outputs, "`node value` lines");
  verify->add_option("--trace", v_trace, "Full sync trace to analyze");
  verify->add_option("--stats", v_stats, "CSV prefix for trace statistics");
  v_ga.add_to(verify);

  std::string c_in, c_out, c_side, c_stage = "all";
  auto* compile = app.add_subcommand("compile", "Compile to an asynchronous single-letter protocol");
  compile->add_option("input", c_in, "Protocol file, or mis / coloring")->required();
  compile->add_option("-o,--output", c_out)->required();
  compile->add_option("--annotations", c_side, "Sidecar annotation file");
  compile->add_option("--stage", c_stage)->check(CLI::IsMember({"lower", "all"}));

  std::string e_config, e_replay;
  std::optional<std::size_t> e_threads;
  auto* exp = app.add_subcommand("experiment", "Run a sweep from a JSON config");
  exp->add_option("config", e_config, "Config file");
  exp->add_option("-j,--threads", e_threads);
  exp->add_option("--replay", e_replay, "Re-run the records of a JSON export and compare");

  std::string l_action, l_tm, l_word, l_out;
  std::uint64_t l_seed = 1;
  std::size_t l_max = 8;
  auto* lba = app.add_subcommand("lba", "Compile and check Turing machines on a path");
  lba->add_option("action", l_action)->required()->check(CLI::IsMember({"compile", "run-both", "diff"}));
  lba->add_option("machine", l_tm, "Machine file")->required();
  lba->add_option("-w,--word", l_word, "Input word for run-both");
  lba->add_option("-s,--seed", l_seed);
  lba->add_option("--max-length", l_max, "Longest word for diff");
  lba->add_option("-o,--output", l_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_graph(gen_ga, gen_out);
    if (*run) return cmd_run(ra, run_ga);
    if (*verify) return cmd_verify(v_protocol, v_ga, v_outputs, v_trace, v_stats);
    if (*compile) return cmd_compile(c_in, c_out, c_side, c_stage);
    if (*exp) {
      if (e_config.empty() && e_replay.empty()) throw InvalidInput("give a config file or --replay");
      return cmd_experiment(e_config, e_threads, e_replay);
    }
    if (*lba) return cmd_lba(l_action, l_tm, l_word, l_seed, l_max, l_out);
  } catch (const Error& e) {
    std::cerr << "nfsm: " << e.what() << '\n';
    return kBadInput;
  }
  return 0;
}
