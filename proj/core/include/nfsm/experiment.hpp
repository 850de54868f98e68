#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nfsm/generators.hpp"
#include "nfsm/multi_letter.hpp"
#include "nfsm/verdict.hpp"

namespace nfsm {

/// A protocol the harness can run and verify.
struct ProtocolEntry {
  std::string id;
  MultiLetterProtocol protocol;
  StateId input = 0;
  bool needs_tree = false;
  std::function<Verdict(const NetworkGraph&, std::span<const StateId>)> verify;
};

/// "mis" or "coloring".
ProtocolEntry protocol_entry(std::string_view id);

enum class ExecutionMode { kSync, kAsync };

struct ExperimentConfig {
  std::string protocol = "mis";
  ExecutionMode mode = ExecutionMode::kSync;
  GraphFamily family = GraphFamily::kGnp;
  std::vector<std::size_t> sizes;
  std::optional<double> p;
  std::optional<double> avg_degree;
  std::optional<std::size_t> width;
  /// Async runs only; adversary spec strings as accepted by make_adversary.
  std::vector<std::string> adversaries{"lockstep"};
  std::vector<std::uint64_t> seeds;
  /// Graph seed per run: the run seed plus this offset.
  std::uint64_t graph_seed_offset = 0;
  /// Tournament (MIS) or phase (coloring) statistics from full sync traces.
  bool stats = false;
  std::size_t threads = 1;
  std::uint64_t max_events = 400'000'000;
  std::optional<std::filesystem::path> csv;
  std::optional<std::filesystem::path> json;
};

/// JSON object with keys protocol, mode ("sync" | "async"), graph {family, n: [...] or
/// sizes {from, to, factor}, p | avg_degree, width, seed_offset}, adversaries, seeds
/// ([...] or {first, count}), stats, threads, max_events, output {csv, json}.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ExperimentRecord {
  std::string protocol;
  ExecutionMode mode = ExecutionMode::kSync;
  GraphSpec graph;
  std::string adversary;
  std::uint64_t seed = 0;
  /// Rounds (sync) or run-time in time units (async) to the output configuration.
  double rounds = 0;
  std::uint64_t events = 0;
  bool ok = false;
  std::string verdict;
  std::uint64_t trace_hash = 0;
  std::optional<std::size_t> tournaments;
  std::optional<std::size_t> phases;
};

class VerifierFailure : public Error {
 public:
  VerifierFailure(const std::string& what, ExperimentRecord record) : Error(what), record_(std::move(record)) {}
  const ExperimentRecord& record() const { return record_; }

 private:
  ExperimentRecord record_;
};

/// One run, verified. Never throws on a verifier failure; the record says so.
ExperimentRecord run_record(const ProtocolEntry& entry, ExecutionMode mode, const GraphSpec& graph,
                            const std::string& adversary, std::uint64_t seed, bool stats = false,
                            std::uint64_t max_events = 400'000'000);

/// Every (size, adversary, seed) combination, ordered by that key regardless of thread
/// count. Throws VerifierFailure on the first invalid output, in key order, after all
/// runs finish. Writes the configured CSV and JSON outputs.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config);

/// Re-executes the record's run.
ExperimentRecord replay_record(const ExperimentRecord& record);

void write_records_csv(std::ostream& out, std::span<const ExperimentRecord> records);
void write_records_json(std::ostream& out, std::span<const ExperimentRecord> records);
std::vector<ExperimentRecord> read_records_json(std::istream& in);

enum class ScalingModel { kLog, kLogSquared };

struct ScalingPoint {
  std::size_t n = 0;
  std::size_t samples = 0;
  double median = 0;
  double model = 0;
  double ratio = 0;
};

struct ScalingFit {
  ScalingModel model = ScalingModel::kLog;
  std::vector<ScalingPoint> points;
  double min_ratio = 0;
  double max_ratio = 0;
  /// max_ratio / min_ratio.
  double spread = 0;
  double band = 3;
  bool conforming = false;
  /// Largest n at least 100 times the smallest.
  bool spans_two_orders = false;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Medians per n against log2(n) or log2(n)^2; conforming when spread < band. Needs at
/// least five distinct n >= 2.
ScalingFit scaling_fit(std::span<const std::pair<std::size_t, double>> samples, ScalingModel model, double band = 3.0);
ScalingFit scaling_fit(std::span<const ExperimentRecord> records, ScalingModel model, double band = 3.0);

/// Runs fn(i) for i in [0, count) on `threads` workers; rethrows the first exception.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace nfsm
