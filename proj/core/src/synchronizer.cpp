#include "nfsm/synchronizer.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "nfsm/engine.hpp"

namespace nfsm {
namespace {

constexpr std::uint32_t kMaxBound = 63;
constexpr std::uint64_t kMaxCarriers = 1ULL << 24;

/// Packed state key: carrier | trit | pass | index | acc | phi1 | phi2.
struct Key {
  std::uint32_t carrier;
  std::uint32_t trit;
  std::uint32_t pass;
  std::uint32_t index;
  std::uint32_t acc;
  std::uint32_t phi1;
  std::uint32_t phi2;

  std::uint64_t pack() const {
    return static_cast<std::uint64_t>(carrier) << 40 | static_cast<std::uint64_t>(trit) << 38 |
           static_cast<std::uint64_t>(pass) << 36 | static_cast<std::uint64_t>(index) << 18 |
           static_cast<std::uint64_t>(acc) << 12 | static_cast<std::uint64_t>(phi1) << 6 | phi2;
  }
};

std::string count_name(std::uint32_t c, std::uint32_t b) { return c >= b ? "sat" : std::to_string(c); }

class Builder {
 public:
  Builder(const Protocol& p, const SynchronizerOptions& opts)
      : p_(p), opts_(opts), b_(p.bound()), m_(static_cast<std::uint32_t>(p.num_letters() + 1)) {}

  CompiledProtocol build() {
    cp_.source_states = p_.num_states();
    cp_.source_letters = p_.num_letters();
    cp_.bound = b_;
    make_letters();

    cp_.inputs.assign(p_.num_states(), kNoLetter);
    for (StateId q : p_.input_states()) {
      const StateId s = intern({carrier(q, p_.initial_letter()), 1, 0, 0, 0, 0, 0});
      cp_.inputs[q] = s;
    }
    for (StateId s = 0; s < keys_.size(); ++s) emit(s);

    data_.bound = b_;
    data_.initial_letter = cp_.letter_id(kEpsilon, p_.initial_letter(), 0);
    data_.offsets.push_back(static_cast<std::uint32_t>(data_.outcomes.size()));
    for (StateId q : p_.input_states()) data_.input[cp_.inputs[q]] = true;
    cp_.carriers = carriers_.size();
    cp_.protocol = Protocol(std::move(data_));
    return std::move(cp_);
  }

 private:
  LetterId id(std::uint32_t a, std::uint32_t c, std::uint32_t j) const { return (a * m_ + c) * 3 + j; }

  void make_letters() {
    auto name = [&](std::uint32_t a) { return a == 0 ? std::string("eps") : p_.letter_name(a - 1); };
    for (std::uint32_t a = 0; a < m_; ++a) {
      for (std::uint32_t c = 0; c < m_; ++c) {
        for (std::uint32_t j = 0; j < 3; ++j) {
          data_.letters.add(name(a) + "/" + name(c) + "/" + std::to_string(j));
          cp_.letters.push_back({a == 0 ? kEpsilon : a - 1, c == 0 ? kEpsilon : c - 1, static_cast<std::uint8_t>(j)});
        }
      }
    }
  }

  std::uint32_t carrier(StateId q, LetterId carried) {
    const std::uint64_t key = static_cast<std::uint64_t>(q) * p_.num_letters() + carried;
    auto [it, fresh] = carrier_ids_.emplace(key, static_cast<std::uint32_t>(carriers_.size()));
    if (fresh) {
      if (carriers_.size() >= kMaxCarriers) throw Error("synchronizer: too many carriers");
      carriers_.push_back({q, carried});
      gamma_prev_.emplace_back();
      gamma_cur_.emplace_back();
      for (std::uint32_t j = 0; j < 3; ++j) build_gammas(q, j);
    }
    return it->second;
  }

  // Letters of neighbors whose port held lambda(q) after round t-1: those that have not
  // finished round t (trit j-1) and those that have (trit j), in ascending id order.
  void build_gammas(StateId q, std::uint32_t j) {
    const std::uint32_t l = p_.query(q) + 1;
    const std::uint32_t jp = (j + 2) % 3;
    std::vector<LetterId> prev;
    std::vector<LetterId> cur;
    for (std::uint32_t g = 0; g < m_; ++g) {
      prev.push_back(id(g, l, jp));
      cur.push_back(id(l, g, j));
    }
    prev.push_back(id(l, 0, jp));
    std::sort(prev.begin(), prev.end());
    std::sort(cur.begin(), cur.end());
    gamma_prev_.back()[j] = std::move(prev);
    gamma_cur_.back()[j] = std::move(cur);
  }

  StateId intern(const Key& k) {
    auto [it, fresh] = ids_.emplace(k.pack(), static_cast<StateId>(keys_.size()));
    if (!fresh) return it->second;
    if (keys_.size() >= opts_.max_states) {
      throw Error("synchronizer: compiled protocol exceeds " + std::to_string(opts_.max_states) + " states");
    }
    keys_.push_back(k);
    const auto [q, carried] = carriers_[k.carrier];
    SyncStateAnnotation a;
    a.source = q;
    a.carried = carried;
    a.feature = k.pass == 0 ? Feature::kPausing : Feature::kSimulating;
    a.trit = static_cast<std::uint8_t>(k.trit);
    a.pass = static_cast<std::uint8_t>(k.pass);
    a.index = k.index;
    a.acc = static_cast<std::uint8_t>(k.acc);
    a.phi1 = static_cast<std::uint8_t>(k.phi1);
    a.phi2 = static_cast<std::uint8_t>(k.phi2);
    cp_.states.push_back(a);

    std::string name = p_.state_name(q) + "|" + p_.letter_name(carried) + "|" + std::to_string(k.trit) + "|";
    switch (k.pass) {
      case 0: name += "p" + std::to_string(k.index); break;
      case 1: name += "a" + std::to_string(k.index) + "." + count_name(k.acc, b_); break;
      case 2: name += "b" + count_name(k.phi1, b_) + "." + std::to_string(k.index) + "." + count_name(k.acc, b_); break;
      default:
        name += "c" + count_name(k.phi1, b_) + "." + count_name(k.phi2, b_) + "." + std::to_string(k.index) + "." +
                count_name(k.acc, b_);
    }
    data_.states.add(std::move(name));
    data_.input.push_back(false);
    data_.output.push_back(p_.is_output(q));
    data_.query.push_back(kNoLetter);
    return it->second;
  }

  // Transitions of state s; states are emitted in id order so rows stay contiguous.
  void emit(StateId s) {
    const Key k = keys_[s];
    const auto [q, carried] = carriers_[k.carrier];
    const auto& prev = gamma_prev_[k.carrier][k.trit];
    const auto& cur = gamma_cur_[k.carrier][k.trit];
    const std::uint32_t pairs = m_ * m_;
    const std::uint32_t next_trit = (k.trit + 1) % 3;
    auto row = [&] { data_.offsets.push_back(static_cast<std::uint32_t>(data_.outcomes.size())); };
    auto to = [&](const Key& target) { data_.outcomes.push_back({intern(target), kEpsilon}); };
    const Key restart{k.carrier, k.trit, 1, 0, 0, 0, 0};

    if (k.pass == 0) {
      // Dirty letters carry trit j-2 = j+1 (mod 3).
      data_.query[s] = id(k.index / m_, k.index % m_, next_trit);
      for (std::uint32_t c = 0; c <= b_; ++c) {
        row();
        if (c != 0) {
          data_.outcomes.push_back({s, kEpsilon});
        } else if (k.index + 1 < pairs) {
          to({k.carrier, k.trit, 0, k.index + 1, 0, 0, 0});
        } else {
          to(restart);
        }
      }
      return;
    }

    // `carrier()` below may grow the gamma tables, so nothing refers into them past here.
    const auto& letters = k.pass == 2 ? cur : prev;
    data_.query[s] = letters[k.index];
    const bool last = k.index + 1 == letters.size();
    for (std::uint32_t c = 0; c <= b_; ++c) {
      row();
      const std::uint32_t acc = std::min(k.acc + c, b_);
      if (!last) {
        to({k.carrier, k.trit, k.pass, k.index + 1, acc, k.phi1, k.phi2});
      } else if (k.pass == 1) {
        to({k.carrier, k.trit, 2, 0, 0, acc, 0});
      } else if (k.pass == 2) {
        to({k.carrier, k.trit, 3, 0, 0, k.phi1, acc});
      } else if (acc != k.phi1) {
        to(restart);
      } else {
        const std::uint32_t total = std::min(k.phi1 + k.phi2, b_);
        for (const Outcome& o : p_.transition_at(q, total)) {
          const LetterId next_carried = o.letter == kEpsilon ? carried : o.letter;
          const StateId next = intern({carrier(o.next, next_carried), next_trit, 0, 0, 0, 0, 0});
          const std::uint32_t cur_letter = o.letter == kEpsilon ? 0 : o.letter + 1;
          data_.outcomes.push_back({next, id(carried + 1, cur_letter, k.trit)});
        }
      }
    }
  }

  const Protocol& p_;
  const SynchronizerOptions& opts_;
  std::uint32_t b_;
  std::uint32_t m_;
  CompiledProtocol cp_;
  ProtocolData data_;
  std::vector<Key> keys_;
  std::unordered_map<std::uint64_t, StateId> ids_;
  std::vector<std::pair<StateId, LetterId>> carriers_;
  std::unordered_map<std::uint64_t, std::uint32_t> carrier_ids_;
  std::vector<std::array<std::vector<LetterId>, 3>> gamma_prev_;
  std::vector<std::array<std::vector<LetterId>, 3>> gamma_cur_;
};

}  // namespace

StateId CompiledProtocol::compiled_input(StateId source) const {
  if (source >= inputs.size() || inputs[source] == kNoLetter) {
    throw InvalidInput("source state " + std::to_string(source) + " is not an input state");
  }
  return inputs[source];
}

LetterId CompiledProtocol::letter_id(LetterId prev, LetterId cur, std::uint32_t trit) const {
  const auto m = static_cast<std::uint32_t>(source_letters + 1);
  const std::uint32_t a = prev == kEpsilon ? 0 : prev + 1;
  const std::uint32_t c = cur == kEpsilon ? 0 : cur + 1;
  return (a * m + c) * 3 + trit;
}

std::size_t CompiledProtocol::size_reference() const {
  return carriers * (source_letters * source_letters + source_letters * bound);
}

CompiledProtocol compile_synchronizer(const Protocol& p, const SynchronizerOptions& opts) {
  require_valid(validate_protocol(p), "protocol");
  if (p.num_letters() > opts.max_letters) {
    throw Error("synchronizer: alphabet of " + std::to_string(p.num_letters()) + " letters exceeds the cap of " +
                std::to_string(opts.max_letters));
  }
  if (p.bound() > kMaxBound) throw Error("synchronizer: bound above " + std::to_string(kMaxBound));
  if ((p.num_letters() + 1) * (p.num_letters() + 1) >= (1U << 18)) throw Error("synchronizer: alphabet too large");
  return Builder(p, opts).build();
}

void write_annotations(std::ostream& out, const CompiledProtocol& cp) {
  out << "sync " << cp.source_states << ' ' << cp.source_letters << ' ' << cp.bound << ' ' << cp.carriers << '\n';
  for (StateId q = 0; q < cp.inputs.size(); ++q) {
    if (cp.inputs[q] != kNoLetter) out << "input " << q << ' ' << cp.inputs[q] << '\n';
  }
  auto letter = [](LetterId l) { return l == kEpsilon ? std::string("-") : std::to_string(l); };
  for (StateId s = 0; s < cp.states.size(); ++s) {
    const auto& a = cp.states[s];
    out << "state " << s << ' ' << a.source << ' ' << a.carried << ' '
        << (a.feature == Feature::kPausing ? "pausing" : "simulating") << ' ' << int(a.trit) << ' ' << int(a.pass)
        << ' ' << a.index << ' ' << int(a.acc) << ' ' << int(a.phi1) << ' ' << int(a.phi2) << '\n';
  }
  for (LetterId l = 0; l < cp.letters.size(); ++l) {
    const auto& a = cp.letters[l];
    out << "letter " << l << ' ' << letter(a.prev) << ' ' << letter(a.cur) << ' ' << int(a.trit) << '\n';
  }
}

CompiledProtocol read_annotations(std::istream& in, Protocol protocol) {
  CompiledProtocol cp;
  cp.states.resize(protocol.num_states());
  cp.letters.resize(protocol.num_letters());
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw Error("annotation line " + std::to_string(lineno) + ": " + why);
  };
  auto parse_letter = [&](const std::string& s) -> LetterId {
    return s == "-" ? kEpsilon : static_cast<LetterId>(std::stoul(s));
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream f(line);
    std::string kind;
    if (!(f >> kind)) continue;
    if (kind == "sync") {
      if (!(f >> cp.source_states >> cp.source_letters >> cp.bound >> cp.carriers)) fail("bad header");
      cp.inputs.assign(cp.source_states, kNoLetter);
    } else if (kind == "input") {
      StateId q, s;
      if (!(f >> q >> s) || q >= cp.inputs.size() || s >= protocol.num_states()) fail("bad input record");
      cp.inputs[q] = s;
    } else if (kind == "state") {
      StateId s;
      std::string feature;
      int trit, pass, acc, phi1, phi2;
      SyncStateAnnotation a;
      if (!(f >> s >> a.source >> a.carried >> feature >> trit >> pass >> a.index >> acc >> phi1 >> phi2) ||
          s >= cp.states.size() || (feature != "pausing" && feature != "simulating")) {
        fail("bad state record");
      }
      a.feature = feature == "pausing" ? Feature::kPausing : Feature::kSimulating;
      a.trit = static_cast<std::uint8_t>(trit);
      a.pass = static_cast<std::uint8_t>(pass);
      a.acc = static_cast<std::uint8_t>(acc);
      a.phi1 = static_cast<std::uint8_t>(phi1);
      a.phi2 = static_cast<std::uint8_t>(phi2);
      cp.states[s] = a;
    } else if (kind == "letter") {
      LetterId l;
      std::string prev, cur;
      int trit;
      if (!(f >> l >> prev >> cur >> trit) || l >= cp.letters.size()) fail("bad letter record");
      cp.letters[l] = {parse_letter(prev), parse_letter(cur), static_cast<std::uint8_t>(trit)};
    } else {
      fail("unknown record '" + kind + "'");
    }
  }
  cp.protocol = std::move(protocol);
  return cp;
}

SyncCheckReport check_S1_S2(const ExecutionTrace& t, const CompiledProtocol& cp, const NetworkGraph& g) {
  constexpr std::size_t kMaxMessages = 50;
  SyncCheckReport report;
  auto violation = [&](const std::string& what) {
    ++report.violation_count;
    if (report.violations.size() < kMaxMessages) report.violations.push_back(what);
  };
  if (t.mode != TraceMode::kFull || t.num_nodes != g.num_nodes() || t.initial_states.size() != g.num_nodes()) {
    violation("trace does not match the graph or was recorded without events");
    return report;
  }
  const std::size_t n = g.num_nodes();
  std::vector<std::uint64_t> round(n, 0);
  std::vector<std::uint32_t> restarts(n, 0);
  std::vector<std::uint64_t> delivered(g.num_arcs(), 0);
  std::vector<StateId> state = t.initial_states;

  auto where = [](const TraceEvent& e) {
    std::ostringstream out;
    out << "node " << e.node << " step " << e.step << " at t=" << e.time;
    return out.str();
  };
  auto check_ports = [&](const TraceEvent& e, std::uint64_t phase, const char* what) {
    const std::uint32_t first = g.arc_begin(e.node);
    for (std::uint32_t a = first; a < first + g.degree(e.node); ++a) {
      const std::uint64_t k = delivered[a];
      if (k + 1 != phase && k != phase) {
        violation(where(e) + ": " + what + " of round " + std::to_string(phase) + " with the port of neighbor " +
                  std::to_string(g.arc_target(a)) + " holding the round " + std::to_string(k) + " message");
      }
    }
  };

  for (const TraceEvent& e : t.events) {
    if (e.kind == EventKind::kDelivery) {
      if (g.has_edge(e.node, e.peer)) ++delivered[g.arc_of(e.node, e.peer)];
      continue;
    }
    if (e.kind != EventKind::kStepEnd) continue;
    const NodeId v = e.node;
    if (e.before >= cp.states.size() || e.after >= cp.states.size()) {
      violation(where(e) + ": state outside the compiled protocol");
      continue;
    }
    if (e.before != state[v]) violation(where(e) + ": step does not start where the previous one ended");
    state[v] = e.after;
    const auto& before = cp.states[e.before];
    const auto& after = cp.states[e.after];
    const std::uint32_t jump = (after.trit + 3 - before.trit) % 3;
    if (jump == 0) {
      if (before.feature == Feature::kPausing && after.feature == Feature::kSimulating) {
        ++report.pausing_checks;
        check_ports(e, round[v] + 1, "finished pausing");
      } else if (before.pass == 3 && after.pass == 1 && after.index == 0) {
        ++restarts[v];
        report.max_restarts = std::max(report.max_restarts, restarts[v]);
        if (restarts[v] > cp.bound) {
          violation(where(e) + ": round " + std::to_string(round[v] + 1) + " restarted " +
                    std::to_string(restarts[v]) + " times");
        }
      }
      continue;
    }
    check_ports(e, round[v] + 1, "finished");
    if (jump == 2) violation(where(e) + ": simulated round advanced by 2");
    round[v] += jump;
    restarts[v] = 0;
    ++report.phases;
    for (NodeId u : g.neighbors(v)) {
      const std::uint64_t ru = round[u];
      if (round[v] > ru + 1 || ru > round[v] + 1) {
        violation(where(e) + ": (S1) broken, node at round " + std::to_string(round[v]) + " next to node " +
                  std::to_string(u) + " at round " + std::to_string(ru));
      }
    }
  }
  report.rounds = std::move(round);
  return report;
}

}  // namespace nfsm
