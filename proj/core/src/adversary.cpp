#include "nfsm/adversary.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "nfsm/rng.hpp"

namespace nfsm {
namespace {

constexpr std::uint64_t kStepKind = 1;
constexpr std::uint64_t kDelayKind = 2;

std::uint64_t adversary_word(std::uint64_t seed, std::uint64_t kind, NodeId v, std::uint64_t t, std::uint64_t u) {
  return draw_word(seed, (kind << 32) | v, mix64(t) ^ u);
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw UnknownPolicy("bad " + what + " '" + s + "'");
  return x;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

void require_unit(double value, const std::string& what) {
  if (!(value > 0.0 && value <= 1.0)) throw Error(what + " must lie in (0, 1]");
}

}  // namespace

std::string UniformAdversary::name() const { return "uniform:" + std::to_string(seed_); }

double UniformAdversary::step_length(NodeId v, std::uint64_t t) const {
  return uniform_open_closed(adversary_word(seed_, kStepKind, v, t, 0));
}

double UniformAdversary::delay(NodeId v, std::uint64_t t, NodeId u) const {
  return uniform_open_closed(adversary_word(seed_, kDelayKind, v, t, u));
}

SkewAdversary::SkewAdversary(std::uint64_t seed, std::vector<NodeId> slow, double factor, double fast_max)
    : seed_(seed), slow_(std::move(slow)), factor_(factor), fast_max_(fast_max) {
  require_unit(factor_, "skew factor");
  require_unit(fast_max_, "skew fast range");
  std::sort(slow_.begin(), slow_.end());
  slow_.erase(std::unique(slow_.begin(), slow_.end()), slow_.end());
}

std::string SkewAdversary::name() const {
  std::ostringstream out;
  out << "skew:" << seed_ << ':';
  for (std::size_t i = 0; i < slow_.size(); ++i) out << (i ? "," : "") << slow_[i];
  out << ':' << factor_;
  return out.str();
}

bool SkewAdversary::slow(NodeId v) const { return std::binary_search(slow_.begin(), slow_.end(), v); }

double SkewAdversary::step_length(NodeId v, std::uint64_t t) const {
  if (slow(v)) return factor_;
  return fast_max_ * uniform_open_closed(adversary_word(seed_, kStepKind, v, t, 0));
}

double SkewAdversary::delay(NodeId v, std::uint64_t t, NodeId u) const {
  if (slow(v) || slow(u)) return factor_;
  return fast_max_ * uniform_open_closed(adversary_word(seed_, kDelayKind, v, t, u));
}

ReplayAdversary ReplayAdversary::from_stream(std::istream& in) {
  ReplayAdversary r;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string kind;
    if (!(fields >> kind)) continue;
    NodeId v = 0;
    NodeId u = 0;
    std::uint64_t t = 0;
    double value = 0;
    bool ok = false;
    if (kind == "L") {
      ok = static_cast<bool>(fields >> v >> t >> value);
      if (ok) r.set_step_length(v, t, value);
    } else if (kind == "D") {
      ok = static_cast<bool>(fields >> v >> t >> u >> value);
      if (ok) r.set_delay(v, t, u, value);
    }
    if (!ok) throw Error("replay line " + std::to_string(lineno) + ": cannot parse '" + line + "'");
  }
  return r;
}

ReplayAdversary ReplayAdversary::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open replay file " + path.string());
  return from_stream(in);
}

void ReplayAdversary::set_step_length(NodeId v, std::uint64_t t, double value) {
  require_unit(value, "replayed step length");
  steps_[{v, t}] = value;
}

void ReplayAdversary::set_delay(NodeId v, std::uint64_t t, NodeId u, double value) {
  require_unit(value, "replayed delay");
  delays_[{v, t, u}] = value;
}

void ReplayAdversary::write(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  for (const auto& [key, value] : steps_) out << "L " << key.first << ' ' << key.second << ' ' << value << '\n';
  for (const auto& [key, value] : delays_) {
    out << "D " << std::get<0>(key) << ' ' << std::get<1>(key) << ' ' << std::get<2>(key) << ' ' << value << '\n';
  }
  out.precision(old_precision);
}

double ReplayAdversary::step_length(NodeId v, std::uint64_t t) const {
  auto it = steps_.find({v, t});
  return it == steps_.end() ? 1.0 : it->second;
}

double ReplayAdversary::delay(NodeId v, std::uint64_t t, NodeId u) const {
  auto it = delays_.find({v, t, u});
  return it == delays_.end() ? 1.0 : it->second;
}

std::unique_ptr<AdversaryPolicy> make_adversary(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.empty()) throw UnknownPolicy("empty adversary spec");
  const std::string& kind = parts[0];
  if (kind == "lockstep" && parts.size() == 1) return std::make_unique<LockstepAdversary>();
  if (kind == "uniform" && parts.size() == 2) {
    return std::make_unique<UniformAdversary>(parse_u64(parts[1], "seed"));
  }
  if (kind == "skew" && parts.size() == 4) {
    std::vector<NodeId> slow;
    for (const auto& s : split(parts[2], ',')) {
      if (!s.empty()) slow.push_back(static_cast<NodeId>(parse_u64(s, "node id")));
    }
    double factor = 0;
    try {
      factor = std::stod(parts[3]);
    } catch (const std::exception&) {
      throw UnknownPolicy("bad skew factor '" + parts[3] + "'");
    }
    return std::make_unique<SkewAdversary>(parse_u64(parts[1], "seed"), std::move(slow), factor);
  }
  if (kind == "replay" && parts.size() >= 2) {
    // File names may contain ':'.
    return std::make_unique<ReplayAdversary>(ReplayAdversary::from_file(spec.substr(7)));
  }
  throw UnknownPolicy("unknown adversary spec '" + spec + "'");
}

std::vector<PolicyInfo> adversary_catalog() {
  return {
      {"lockstep", "lockstep", "every step length and delay equals 1"},
      {"uniform", "uniform:<seed>", "i.i.d. uniform values on (0, 1]"},
      {"skew", "skew:<seed>:<v1,v2,...>:<factor>",
       "listed nodes and their links take value <factor>, the rest uniform on (0, 0.05]"},
      {"replay", "replay:<file>", "values read from a recorded schedule, 1 where missing"},
  };
}

}  // namespace nfsm
