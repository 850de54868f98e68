#include "nfsm/trace.hpp"

#include <bit>
#include <cstring>
#include <deque>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "nfsm/rng.hpp"

namespace nfsm {
namespace {

constexpr char kMagic[8] = {'N', 'F', 'S', 'M', 'T', 'R', 'C', '1'};

std::string letter_token(LetterId l) { return l == kEpsilon ? "-" : std::to_string(l); }

LetterId parse_letter_token(const std::string& s) {
  return s == "-" ? kEpsilon : static_cast<LetterId>(std::stoul(s));
}

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "binary traces assume a little-endian host");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <class T>
T get(std::istream& in) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw Error("truncated binary trace");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

std::string event_label(std::size_t i, const TraceEvent& e) {
  std::ostringstream out;
  out << "event " << i << " (";
  switch (e.kind) {
    case EventKind::kStepEnd: out << "step " << e.step << " of node " << e.node; break;
    case EventKind::kDelivery: out << "delivery " << e.peer << "->" << e.node; break;
    case EventKind::kOutputConfig: out << "output configuration"; break;
  }
  out << " at t=" << e.time << ")";
  return out.str();
}

struct Sent {
  std::uint64_t step;
  LetterId letter;
};

/// Replays a trace's deliveries against per-link transmission queues and port registers.
/// `on_read(i, event, port_row)` is called for every StepEnd before its own transmission.
template <class OnRead>
std::vector<std::string> replay_links(const ExecutionTrace& t, const NetworkGraph& g, OnRead on_read) {
  std::vector<std::string> violations;
  if (t.num_nodes != g.num_nodes()) {
    violations.push_back("trace has " + std::to_string(t.num_nodes) + " nodes, graph has " +
                         std::to_string(g.num_nodes()));
    return violations;
  }
  if (t.mode != TraceMode::kFull) {
    violations.push_back("trace was recorded without events");
    return violations;
  }
  std::vector<std::deque<Sent>> in_flight(g.num_arcs());
  std::vector<LetterId> port(g.num_arcs(), t.initial_letter);
  double last_time = 0;
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const TraceEvent& e = t.events[i];
    if (e.time < last_time) violations.push_back(event_label(i, e) + ": time decreases from " + std::to_string(last_time));
    last_time = std::max(last_time, e.time);
    if (e.kind == EventKind::kOutputConfig) continue;
    if (e.node >= g.num_nodes() || (e.kind == EventKind::kDelivery && e.peer >= g.num_nodes())) {
      violations.push_back(event_label(i, e) + ": node id out of range");
      continue;
    }
    if (e.kind == EventKind::kStepEnd) {
      on_read(i, e, port, violations);
      if (e.letter != kEpsilon) {
        const std::uint32_t first = g.arc_begin(e.node);
        for (std::uint32_t a = first; a < first + g.degree(e.node); ++a) in_flight[a].push_back({e.step, e.letter});
      }
      continue;
    }
    if (!g.has_edge(e.peer, e.node)) {
      violations.push_back(event_label(i, e) + ": no such link");
      continue;
    }
    const std::uint32_t arc = g.arc_of(e.peer, e.node);
    auto& queue = in_flight[arc];
    auto it = std::find_if(queue.begin(), queue.end(), [&](const Sent& s) { return s.step == e.step; });
    if (it == queue.end()) {
      violations.push_back(event_label(i, e) + ": no matching earlier transmission");
      continue;
    }
    if (it != queue.begin()) {
      violations.push_back(event_label(i, e) + ": FIFO violation, step " + std::to_string(e.step) +
                           " delivered before step " + std::to_string(queue.front().step));
    }
    if (it->letter != e.letter) {
      violations.push_back(event_label(i, e) + ": delivered letter differs from the transmitted one");
    }
    queue.erase(it);
    port[g.reverse_arc(arc)] = e.letter;
  }
  return violations;
}

}  // namespace

void TraceHasher::update(const TraceEvent& e) {
  constexpr std::uint64_t k = 0x9fb21c651e98df25ULL;
  auto absorb = [&](std::uint64_t w) { h_ = std::rotl((h_ ^ w) * k, 29); };
  absorb(static_cast<std::uint64_t>(e.kind) << 32 | e.node);
  absorb(std::bit_cast<std::uint64_t>(e.time));
  absorb(e.step ^ static_cast<std::uint64_t>(e.peer) << 40);
  absorb(static_cast<std::uint64_t>(e.before) << 32 | e.after);
  absorb(static_cast<std::uint64_t>(e.letter) << 32 | e.observed);
  absorb(std::bit_cast<std::uint64_t>(e.value));
}

std::string hash_hex(std::uint64_t hash) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << hash;
  return out.str();
}

void write_trace_text(std::ostream& out, const ExecutionTrace& t) {
  const auto old_precision = out.precision(17);
  out << "nfsm-trace 1 " << t.num_nodes << ' ' << t.num_letters << ' ' << t.bound << ' '
      << letter_token(t.initial_letter) << ' ' << (t.multi_letter ? 1 : 0) << '\n';
  out << "init";
  for (StateId q : t.initial_states) out << ' ' << q;
  out << '\n';
  out << "hash " << hash_hex(t.hash) << ' ' << t.num_events << '\n';
  for (const TraceEvent& e : t.events) {
    switch (e.kind) {
      case EventKind::kStepEnd:
        out << "S " << e.time << ' ' << e.node << ' ' << e.step << ' ' << e.before << ' ' << e.after << ' '
            << letter_token(e.letter) << ' ' << e.observed << ' ' << e.value << '\n';
        break;
      case EventKind::kDelivery:
        out << "D " << e.time << ' ' << e.node << ' ' << e.peer << ' ' << e.step << ' ' << letter_token(e.letter)
            << ' ' << e.value << '\n';
        break;
      case EventKind::kOutputConfig: out << "O " << e.time << '\n'; break;
    }
  }
  if (t.multi_letter && t.num_letters > 0) {
    const std::size_t rows = t.observed_vectors.size() / t.num_letters;
    for (std::size_t r = 0; r < rows; ++r) {
      out << "V " << r;
      for (std::uint8_t c : t.observed_vector(static_cast<std::uint32_t>(r))) out << ' ' << static_cast<int>(c);
      out << '\n';
    }
  }
  out.precision(old_precision);
}

ExecutionTrace read_trace_text(std::istream& in) {
  ExecutionTrace t;
  t.mode = TraceMode::kFull;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) { throw Error("trace line " + std::to_string(lineno) + ": " + why); };
  if (!std::getline(in, line)) throw Error("empty trace");
  ++lineno;
  {
    std::istringstream f(line);
    std::string magic, initial;
    int version = 0, multi = 0;
    if (!(f >> magic >> version >> t.num_nodes >> t.num_letters >> t.bound >> initial >> multi) ||
        magic != "nfsm-trace" || version != 1) {
      fail("bad header");
    }
    t.initial_letter = parse_letter_token(initial);
    t.multi_letter = multi != 0;
  }
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream f(line);
    std::string kind;
    if (!(f >> kind)) continue;
    TraceEvent e;
    std::string letter;
    if (kind == "init") {
      StateId q;
      while (f >> q) t.initial_states.push_back(q);
      continue;
    }
    if (kind == "hash") {
      std::string hex;
      if (!(f >> hex >> t.num_events)) fail("bad hash line");
      t.hash = std::stoull(hex, nullptr, 16);
      continue;
    }
    if (kind == "S") {
      e.kind = EventKind::kStepEnd;
      if (!(f >> e.time >> e.node >> e.step >> e.before >> e.after >> letter >> e.observed >> e.value)) fail("bad step");
      e.letter = parse_letter_token(letter);
    } else if (kind == "D") {
      e.kind = EventKind::kDelivery;
      if (!(f >> e.time >> e.node >> e.peer >> e.step >> letter >> e.value)) fail("bad delivery");
      e.letter = parse_letter_token(letter);
    } else if (kind == "O") {
      e.kind = EventKind::kOutputConfig;
      if (!(f >> e.time)) fail("bad output event");
    } else if (kind == "V") {
      std::size_t row;
      if (!(f >> row) || row * t.num_letters != t.observed_vectors.size()) fail("bad observation row");
      for (std::size_t i = 0; i < t.num_letters; ++i) {
        int c;
        if (!(f >> c)) fail("short observation row");
        t.observed_vectors.push_back(static_cast<std::uint8_t>(c));
      }
      continue;
    } else {
      fail("unknown record '" + kind + "'");
    }
    t.events.push_back(e);
  }
  return t;
}

void write_trace_binary(std::ostream& out, const ExecutionTrace& t) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, t.num_nodes);
  put<std::uint64_t>(out, t.num_letters);
  put<std::uint32_t>(out, t.bound);
  put<std::uint32_t>(out, t.initial_letter);
  put<std::uint8_t>(out, t.multi_letter ? 1 : 0);
  put<std::uint64_t>(out, t.hash);
  put<std::uint64_t>(out, t.num_events);
  put<std::uint64_t>(out, t.initial_states.size());
  for (StateId q : t.initial_states) put<std::uint32_t>(out, q);
  put<std::uint64_t>(out, t.events.size());
  for (const TraceEvent& e : t.events) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.kind));
    put<double>(out, e.time);
    put<std::uint32_t>(out, e.node);
    put<std::uint32_t>(out, e.peer);
    put<std::uint64_t>(out, e.step);
    put<std::uint32_t>(out, e.before);
    put<std::uint32_t>(out, e.after);
    put<std::uint32_t>(out, e.letter);
    put<std::uint32_t>(out, e.observed);
    put<double>(out, e.value);
  }
  put<std::uint64_t>(out, t.observed_vectors.size());
  out.write(reinterpret_cast<const char*>(t.observed_vectors.data()), static_cast<std::streamsize>(t.observed_vectors.size()));
}

ExecutionTrace read_trace_binary(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error("not a binary nfsm trace");
  }
  ExecutionTrace t;
  t.mode = TraceMode::kFull;
  t.num_nodes = get<std::uint64_t>(in);
  t.num_letters = get<std::uint64_t>(in);
  t.bound = get<std::uint32_t>(in);
  t.initial_letter = get<std::uint32_t>(in);
  t.multi_letter = get<std::uint8_t>(in) != 0;
  t.hash = get<std::uint64_t>(in);
  t.num_events = get<std::uint64_t>(in);
  t.initial_states.resize(get<std::uint64_t>(in));
  for (StateId& q : t.initial_states) q = get<std::uint32_t>(in);
  t.events.resize(get<std::uint64_t>(in));
  for (TraceEvent& e : t.events) {
    const auto kind = get<std::uint8_t>(in);
    if (kind > 2) throw Error("bad event kind in binary trace");
    e.kind = static_cast<EventKind>(kind);
    e.time = get<double>(in);
    e.node = get<std::uint32_t>(in);
    e.peer = get<std::uint32_t>(in);
    e.step = get<std::uint64_t>(in);
    e.before = get<std::uint32_t>(in);
    e.after = get<std::uint32_t>(in);
    e.letter = get<std::uint32_t>(in);
    e.observed = get<std::uint32_t>(in);
    e.value = get<double>(in);
  }
  t.observed_vectors.resize(get<std::uint64_t>(in));
  if (!in.read(reinterpret_cast<char*>(t.observed_vectors.data()), static_cast<std::streamsize>(t.observed_vectors.size()))) {
    throw Error("truncated binary trace");
  }
  return t;
}

void save_trace(const std::filesystem::path& path, const ExecutionTrace& t, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error("cannot write " + path.string());
  if (binary) {
    write_trace_binary(out, t);
  } else {
    write_trace_text(out, t);
  }
}

ExecutionTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char head[sizeof(kMagic)] = {};
  in.read(head, sizeof(head));
  const bool binary = in.gcount() == sizeof(head) && std::memcmp(head, kMagic, sizeof(kMagic)) == 0;
  in.clear();
  in.seekg(0);
  return binary ? read_trace_binary(in) : read_trace_text(in);
}

ReplayAdversary extract_schedule(const ExecutionTrace& t) {
  ReplayAdversary r;
  for (const TraceEvent& e : t.events) {
    if (e.kind == EventKind::kStepEnd) r.set_step_length(e.node, e.step, e.value);
    if (e.kind == EventKind::kDelivery) r.set_delay(e.peer, e.step, e.node, e.value);
  }
  return r;
}

std::vector<std::string> check_trace_wellformed(const ExecutionTrace& t, const NetworkGraph& g) {
  return replay_links(t, g, [](std::size_t, const TraceEvent&, const std::vector<LetterId>&, auto&) {});
}

std::vector<std::string> check_trace_wellformed(const ExecutionTrace& t, const NetworkGraph& g, const Protocol& p) {
  return replay_links(t, g, [&](std::size_t i, const TraceEvent& e, const std::vector<LetterId>& port, auto& violations) {
    if (e.before >= p.num_states()) {
      violations.push_back(event_label(i, e) + ": unknown state");
      return;
    }
    const LetterId wanted = p.query(e.before);
    std::uint64_t count = 0;
    const std::uint32_t first = g.arc_begin(e.node);
    for (std::uint32_t a = first; a < first + g.degree(e.node); ++a) count += port[a] == wanted ? 1 : 0;
    const std::uint32_t expected = f_bounded(count, p.bound()).index(p.bound());
    if (expected != e.observed) {
      violations.push_back(event_label(i, e) + ": read count " + std::to_string(e.observed) +
                           " but ports hold " + std::to_string(count) + " copies of the queried letter");
    }
  });
}

std::vector<std::string> check_trace_wellformed(const ExecutionTrace& t, const NetworkGraph& g,
                                                const MultiLetterProtocol& p) {
  std::vector<std::uint32_t> counts(p.num_letters());
  return replay_links(t, g, [&](std::size_t i, const TraceEvent& e, const std::vector<LetterId>& port, auto& violations) {
    if ((static_cast<std::size_t>(e.observed) + 1) * t.num_letters > t.observed_vectors.size() ||
        t.num_letters != p.num_letters()) {
      violations.push_back(event_label(i, e) + ": missing observation vector");
      return;
    }
    std::fill(counts.begin(), counts.end(), 0);
    const std::uint32_t first = g.arc_begin(e.node);
    for (std::uint32_t a = first; a < first + g.degree(e.node); ++a) {
      if (port[a] < counts.size()) ++counts[port[a]];
    }
    const auto row = t.observed_vector(e.observed);
    for (LetterId l = 0; l < counts.size(); ++l) {
      if (f_bounded(counts[l], p.bound()).index(p.bound()) != row[l]) {
        violations.push_back(event_label(i, e) + ": observed count of '" + p.letter_name(l) +
                             "' disagrees with the port contents");
        return;
      }
    }
  });
}

std::vector<std::string> check_outputs_stay(const ExecutionTrace& t, const std::function<bool(StateId)>& is_output) {
  std::vector<std::string> violations;
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const TraceEvent& e = t.events[i];
    if (e.kind == EventKind::kStepEnd && is_output(e.before) && !is_output(e.after)) {
      violations.push_back(event_label(i, e) + ": left the output states");
    }
  }
  return violations;
}

std::vector<std::vector<StateId>> state_history(const ExecutionTrace& t) {
  std::vector<std::vector<StateId>> rows{t.initial_states};
  for (const TraceEvent& e : t.events) {
    if (e.kind != EventKind::kStepEnd) continue;
    if (e.step >= rows.size()) rows.resize(e.step + 1, rows.back());
    rows[e.step][e.node] = e.after;
  }
  return rows;
}

}  // namespace nfsm
