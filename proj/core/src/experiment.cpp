#include "nfsm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <ostream>
#include <thread>

#include "nfsm/adversary.hpp"
#include "nfsm/coloring.hpp"
#include "nfsm/engine.hpp"
#include "nfsm/mis.hpp"
#include "nfsm/pipeline.hpp"
#include "nfsm/protocol_io.hpp"
#include "nfsm/stats.hpp"

namespace nfsm {
namespace {

using json = nlohmann::json;

const char* mode_name(ExecutionMode m) { return m == ExecutionMode::kSync ? "sync" : "async"; }

ExecutionMode parse_mode(const std::string& s) {
  if (s == "sync") return ExecutionMode::kSync;
  if (s == "async") return ExecutionMode::kAsync;
  throw ParseError("mode must be sync or async, got '" + s + "'");
}

/// Pipelines are costly to build and immutable, so they are shared per protocol id.
const Pipeline& pipeline_for(const ProtocolEntry& entry) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<Pipeline>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[entry.id];
  if (!slot) slot = std::make_unique<Pipeline>(build_pipeline(entry.protocol));
  return *slot;
}

std::string hex(std::uint64_t h) { return hash_hex(h); }

std::uint64_t parse_hex(const std::string& s) { return std::stoull(s, nullptr, 16); }

json record_to_json(const ExperimentRecord& r) {
  json j{{"protocol", r.protocol},
         {"mode", mode_name(r.mode)},
         {"family", family_name(r.graph.family)},
         {"n", r.graph.n},
         {"graph_seed", r.graph.seed},
         {"adversary", r.adversary},
         {"seed", r.seed},
         {"rounds", r.rounds},
         {"events", r.events},
         {"ok", r.ok},
         {"verdict", r.verdict},
         {"trace_hash", hex(r.trace_hash)}};
  if (r.graph.p) j["p"] = *r.graph.p;
  if (r.graph.avg_degree) j["avg_degree"] = *r.graph.avg_degree;
  if (r.graph.width) j["width"] = *r.graph.width;
  if (r.tournaments) j["tournaments"] = *r.tournaments;
  if (r.phases) j["phases"] = *r.phases;
  return j;
}

ExperimentRecord record_from_json(const json& j) {
  ExperimentRecord r;
  r.protocol = j.at("protocol").get<std::string>();
  r.mode = parse_mode(j.at("mode").get<std::string>());
  r.graph.family = parse_family(j.at("family").get<std::string>());
  r.graph.n = j.at("n").get<std::size_t>();
  r.graph.seed = j.at("graph_seed").get<std::uint64_t>();
  if (j.contains("p")) r.graph.p = j["p"].get<double>();
  if (j.contains("avg_degree")) r.graph.avg_degree = j["avg_degree"].get<double>();
  if (j.contains("width")) r.graph.width = j["width"].get<std::size_t>();
  r.adversary = j.value("adversary", std::string("lockstep"));
  r.seed = j.at("seed").get<std::uint64_t>();
  r.rounds = j.value("rounds", 0.0);
  r.events = j.value("events", std::uint64_t{0});
  r.ok = j.value("ok", false);
  r.verdict = j.value("verdict", std::string());
  r.trace_hash = parse_hex(j.value("trace_hash", std::string("0")));
  if (j.contains("tournaments")) r.tournaments = j["tournaments"].get<std::size_t>();
  if (j.contains("phases")) r.phases = j["phases"].get<std::size_t>();
  return r;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

ProtocolEntry protocol_entry(std::string_view id) {
  if (id == "mis") {
    return {"mis", build_mis_protocol(), mis_id(MisState::kDown1), false,
            [](const NetworkGraph& g, std::span<const StateId> s) { return verify_mis_states(g, s); }};
  }
  if (id == "coloring") {
    return {"coloring", build_coloring_protocol(), ColoringLayout::kRound1, true,
            [](const NetworkGraph& g, std::span<const StateId> s) { return verify_coloring_states(g, s); }};
  }
  throw InvalidInput("unknown protocol '" + std::string(id) + "' (expected mis or coloring)");
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c.protocol = j.value("protocol", c.protocol);
    c.mode = parse_mode(j.value("mode", std::string("sync")));
    const json& g = j.at("graph");
    c.family = parse_family(g.at("family").get<std::string>());
    if (g.contains("n")) {
      if (g["n"].is_array()) {
        c.sizes = g["n"].get<std::vector<std::size_t>>();
      } else {
        c.sizes = {g["n"].get<std::size_t>()};
      }
    } else {
      const json& s = g.at("sizes");
      const auto from = s.at("from").get<std::size_t>();
      const auto to = s.at("to").get<std::size_t>();
      const double factor = s.value("factor", 2.0);
      if (from < 1 || factor <= 1) throw ParseError("sizes need from >= 1 and factor > 1");
      for (double x = static_cast<double>(from); x <= static_cast<double>(to) + 0.5; x *= factor)
        c.sizes.push_back(static_cast<std::size_t>(std::llround(x)));
    }
    if (g.contains("p")) c.p = g["p"].get<double>();
    if (g.contains("avg_degree")) c.avg_degree = g["avg_degree"].get<double>();
    if (g.contains("width")) c.width = g["width"].get<std::size_t>();
    c.graph_seed_offset = g.value("seed_offset", std::uint64_t{0});
    if (j.contains("adversaries")) c.adversaries = j["adversaries"].get<std::vector<std::string>>();
    const json& seeds = j.at("seeds");
    if (seeds.is_array()) {
      c.seeds = seeds.get<std::vector<std::uint64_t>>();
    } else {
      const auto first = seeds.value("first", std::uint64_t{1});
      const auto count = seeds.at("count").get<std::uint64_t>();
      for (std::uint64_t s = 0; s < count; ++s) c.seeds.push_back(first + s);
    }
    c.stats = j.value("stats", false);
    c.threads = j.value("threads", std::size_t{1});
    c.max_events = j.value("max_events", c.max_events);
    if (j.contains("output")) {
      const json& o = j["output"];
      if (o.contains("csv")) c.csv = o["csv"].get<std::string>();
      if (o.contains("json")) c.json = o["json"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  if (c.sizes.empty()) throw ParseError("experiment config: no graph sizes");
  if (c.seeds.empty()) throw ParseError("experiment config: no seeds");
  if (c.adversaries.empty()) throw ParseError("experiment config: no adversaries");
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_experiment_config(text);
}

ExperimentRecord run_record(const ProtocolEntry& entry, ExecutionMode mode, const GraphSpec& spec,
                            const std::string& adversary, std::uint64_t seed, bool stats, std::uint64_t max_events) {
  ExperimentRecord r;
  r.protocol = entry.id;
  r.mode = mode;
  r.graph = spec;
  r.adversary = mode == ExecutionMode::kSync ? "lockstep" : adversary;
  r.seed = seed;
  const NetworkGraph g = generate_graph(spec);
  if (entry.needs_tree && !g.is_tree()) throw NotATree(spec.describe() + " is not a tree");
  const auto inputs = uniform_inputs(g, entry.input);

  RunOptions opts;
  opts.max_events = max_events;
  opts.throw_on_cap = false;
  RunResult result;
  std::vector<StateId> outputs;
  if (mode == ExecutionMode::kSync) {
    if (stats) opts.trace = TraceMode::kFull;
    result = run_sync(entry.protocol, g, inputs, seed, opts);
    outputs = result.output_states;
    if (stats && result.report.reached_output) {
      if (entry.id == "mis") r.tournaments = analyze_tournaments(result.trace).max_tournaments();
      if (entry.id == "coloring") r.phases = analyze_phases(result.trace, g).phases.size();
    }
  } else {
    const Pipeline& pl = pipeline_for(entry);
    const auto adv = make_adversary(adversary);
    result = run_pipeline(pl, g, inputs, *adv, seed, opts);
    if (result.report.reached_output) outputs = pl.source_states(result.output_states);
  }
  r.rounds = result.report.run_time;
  r.events = result.report.events;
  r.trace_hash = result.trace.hash;
  if (!result.report.reached_output) {
    r.ok = false;
    r.verdict = "no output configuration within " + std::to_string(max_events) + " events";
    return r;
  }
  const Verdict v = entry.verify(g, outputs);
  r.ok = v.ok;
  r.verdict = v.ok ? "ok" : v.message;
  return r;
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config) {
  const ProtocolEntry entry = protocol_entry(config.protocol);
  struct Task {
    GraphSpec graph;
    std::string adversary;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  const std::vector<std::string> advs =
      config.mode == ExecutionMode::kSync ? std::vector<std::string>{"lockstep"} : config.adversaries;
  for (std::size_t n : config.sizes) {
    for (const auto& a : advs) {
      for (std::uint64_t s : config.seeds) {
        GraphSpec g;
        g.family = config.family;
        g.n = n;
        g.seed = s + config.graph_seed_offset;
        g.p = config.p;
        g.avg_degree = config.avg_degree;
        g.width = config.width;
        tasks.push_back({g, a, s});
      }
    }
  }
  if (config.mode == ExecutionMode::kAsync) pipeline_for(entry);

  std::vector<ExperimentRecord> records(tasks.size());
  parallel_for(tasks.size(), config.threads, [&](std::size_t i) {
    records[i] = run_record(entry, config.mode, tasks[i].graph, tasks[i].adversary, tasks[i].seed, config.stats,
                            config.max_events);
  });

  if (config.csv) {
    std::ofstream out(*config.csv);
    if (!out) throw Error("cannot write " + config.csv->string());
    write_records_csv(out, records);
  }
  if (config.json) {
    std::ofstream out(*config.json);
    if (!out) throw Error("cannot write " + config.json->string());
    write_records_json(out, records);
  }
  for (const auto& r : records) {
    if (!r.ok) {
      throw VerifierFailure("verifier failed on " + r.graph.describe() + " seed " + std::to_string(r.seed) + " (" +
                                r.adversary + "): " + r.verdict,
                            r);
    }
  }
  return records;
}

ExperimentRecord replay_record(const ExperimentRecord& record) {
  return run_record(protocol_entry(record.protocol), record.mode, record.graph, record.adversary, record.seed,
                    record.tournaments.has_value() || record.phases.has_value());
}

void write_records_csv(std::ostream& out, std::span<const ExperimentRecord> records) {
  out << "protocol,mode,family,n,graph_seed,adversary,seed,rounds,events,ok,verdict,trace_hash,tournaments,phases\n";
  for (const auto& r : records) {
    out << r.protocol << ',' << mode_name(r.mode) << ',' << family_name(r.graph.family) << ',' << r.graph.n << ','
        << r.graph.seed << ',' << csv_field(r.adversary) << ',' << r.seed << ',' << r.rounds << ',' << r.events << ','
        << (r.ok ? 1 : 0) << ',' << csv_field(r.verdict) << ',' << hex(r.trace_hash) << ',';
    if (r.tournaments) out << *r.tournaments;
    out << ',';
    if (r.phases) out << *r.phases;
    out << '\n';
  }
}

void write_records_json(std::ostream& out, std::span<const ExperimentRecord> records) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(record_to_json(r));
  out << json{{"records", arr}}.dump(2) << '\n';
}

std::vector<ExperimentRecord> read_records_json(std::istream& in) {
  std::vector<ExperimentRecord> records;
  try {
    const json j = json::parse(in);
    for (const auto& r : j.at("records")) records.push_back(record_from_json(r));
  } catch (const json::exception& e) {
    throw ParseError(std::string("records: ") + e.what());
  }
  return records;
}

ScalingFit scaling_fit(std::span<const std::pair<std::size_t, double>> samples, ScalingModel model, double band) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& [n, value] : samples) {
    if (n < 2) continue;
    by_n[n].push_back(value);
  }
  if (by_n.size() < 5) {
    throw InsufficientData("scaling fit needs at least 5 distinct n >= 2, got " + std::to_string(by_n.size()));
  }
  ScalingFit fit;
  fit.model = model;
  fit.band = band;
  for (auto& [n, values] : by_n) {
    ScalingPoint pt;
    pt.n = n;
    pt.samples = values.size();
    pt.median = median(values);
    const double l = std::log2(static_cast<double>(n));
    pt.model = model == ScalingModel::kLog ? l : l * l;
    pt.ratio = pt.median / pt.model;
    fit.points.push_back(pt);
  }
  auto [lo, hi] = std::minmax_element(fit.points.begin(), fit.points.end(),
                                      [](const ScalingPoint& a, const ScalingPoint& b) { return a.ratio < b.ratio; });
  fit.min_ratio = lo->ratio;
  fit.max_ratio = hi->ratio;
  fit.spread = fit.min_ratio > 0 ? fit.max_ratio / fit.min_ratio : std::numeric_limits<double>::infinity();
  fit.conforming = fit.spread < band;
  fit.spans_two_orders = fit.points.back().n >= 100 * fit.points.front().n;
  return fit;
}

ScalingFit scaling_fit(std::span<const ExperimentRecord> records, ScalingModel model, double band) {
  std::vector<std::pair<std::size_t, double>> samples;
  for (const auto& r : records) samples.emplace_back(r.graph.n, r.rounds);
  return scaling_fit(samples, model, band);
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace nfsm
