#include "nfsm/protocol_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace nfsm {

namespace {

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of(" \t\n(),") != std::string::npos) {
    throw Error("name '" + name + "' cannot be written in the protocol text format");
  }
}

struct Line {
  std::size_t number;
  std::vector<std::string> head;  // tokens before "->"
  std::string tail;               // text after "->"
};

std::vector<Line> read_lines(std::istream& in) {
  std::vector<Line> lines;
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    if (trim(raw).empty()) continue;
    Line line{number, {}, {}};
    if (auto arrow = raw.find("->"); arrow != std::string::npos) {
      line.head = split_ws(std::string_view(raw).substr(0, arrow));
      line.tail = raw.substr(arrow + 2);
    } else {
      line.head = split_ws(raw);
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

[[noreturn]] void fail(const Line& line, const std::string& msg) {
  throw ParseError("line " + std::to_string(line.number) + ": " + msg);
}

// Parses "(a, b) (c, eps) ..." into name pairs.
std::vector<std::pair<std::string, std::string>> parse_outcomes(const Line& line) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string_view s = line.tail;
  std::size_t pos = 0;
  while (true) {
    const auto open = s.find('(', pos);
    if (open == std::string_view::npos) break;
    const auto close = s.find(')', open);
    if (close == std::string_view::npos) fail(line, "unterminated outcome");
    const std::string_view inner = s.substr(open + 1, close - open - 1);
    const auto comma = inner.find(',');
    if (comma == std::string_view::npos) fail(line, "outcome needs (state, letter)");
    out.emplace_back(trim(inner.substr(0, comma)), trim(inner.substr(comma + 1)));
    pos = close + 1;
  }
  if (out.empty()) fail(line, "transition without outcomes");
  return out;
}

std::uint32_t parse_count(const Line& line, const std::string& tok, std::uint32_t bound) {
  if (tok == "sat") return bound;
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(tok, &used);
    if (used != tok.size() || v >= bound) fail(line, "count '" + tok + "' is not in B");
    return static_cast<std::uint32_t>(v);
  } catch (const std::logic_error&) {
    fail(line, "bad count '" + tok + "'");
  }
}

// Declarations shared by both flavours, collected before tables are built.
struct Header {
  std::uint32_t bound = 0;
  NameTable letters;
  NameTable states;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string initial;
};

bool read_header_line(const Line& line, Header& h) {
  const auto& t = line.head;
  const std::string& kw = t[0];
  if (kw == "bound") {
    if (t.size() != 2) fail(line, "bound takes one value");
    try {
      h.bound = static_cast<std::uint32_t>(std::stoul(t[1]));
    } catch (const std::logic_error&) {
      fail(line, "bad bound");
    }
    if (h.bound == 0) fail(line, "bound must be positive");
  } else if (kw == "letter") {
    for (std::size_t i = 1; i < t.size(); ++i) h.letters.add(t[i]);
  } else if (kw == "state") {
    for (std::size_t i = 1; i < t.size(); ++i) h.states.add(t[i]);
  } else if (kw == "input") {
    h.inputs.insert(h.inputs.end(), t.begin() + 1, t.end());
  } else if (kw == "output") {
    h.outputs.insert(h.outputs.end(), t.begin() + 1, t.end());
  } else if (kw == "initial") {
    if (t.size() != 2) fail(line, "initial takes one letter");
    h.initial = t[1];
  } else {
    return false;
  }
  return true;
}

std::uint32_t lookup(const Line& line, const NameTable& table, const std::string& name, const char* what) {
  if (auto id = table.find(name)) return *id;
  fail(line, std::string("unknown ") + what + " '" + name + "'");
}

LetterId lookup_letter(const Line& line, const NameTable& letters, const std::string& name) {
  if (name == "eps") return kEpsilon;
  return lookup(line, letters, name, "letter");
}

void write_common(std::ostream& out, std::uint32_t bound, const std::vector<std::string>& letters,
                  const std::vector<std::string>& states, const std::vector<StateId>& inputs,
                  const std::vector<StateId>& outputs, const std::string& initial) {
  out << "bound " << bound << '\n';
  for (const auto& l : letters) {
    check_name(l);
    out << "letter " << l << '\n';
  }
  for (const auto& s : states) {
    check_name(s);
    out << "state " << s << '\n';
  }
  for (StateId q : inputs) out << "input " << states[q] << '\n';
  for (StateId q : outputs) out << "output " << states[q] << '\n';
  out << "initial " << initial << '\n';
}

void write_outcomes(std::ostream& out, const std::vector<std::string>& states, const std::vector<std::string>& letters,
                    std::span<const Outcome> outs) {
  out << " ->";
  for (const Outcome& o : outs) {
    out << " (" << states[o.next] << ", " << (o.letter == kEpsilon ? std::string("eps") : letters[o.letter]) << ")";
  }
  out << '\n';
}

}  // namespace

void write_protocol(std::ostream& out, const Protocol& p) {
  const auto& d = p.data();
  write_common(out, d.bound, d.letters.names(), d.states.names(), p.input_states(), p.output_states(),
               p.letter_name(p.initial_letter()));
  for (StateId q = 0; q < p.num_states(); ++q) {
    if (p.query(q) < p.num_letters()) out << "query " << p.state_name(q) << ' ' << p.letter_name(p.query(q)) << '\n';
  }
  for (StateId q = 0; q < p.num_states(); ++q) {
    for (std::uint32_t c = 0; c <= d.bound; ++c) {
      auto outs = p.transition_at(q, c);
      if (outs.empty()) continue;
      out << "delta " << p.state_name(q) << ' ' << to_string(BoundedCount::from_index(c, d.bound));
      write_outcomes(out, d.states.names(), d.letters.names(), outs);
    }
  }
}

Protocol read_protocol(std::istream& in) {
  Header h;
  std::vector<Line> body;
  for (auto& line : read_lines(in)) {
    if (line.head.empty()) fail(line, "missing keyword");
    if (line.head[0] == "multi") fail(line, "multi-letter protocol where a single-letter one was expected");
    if (!read_header_line(line, h)) body.push_back(std::move(line));
  }
  if (h.bound == 0) throw ParseError("missing bound declaration");
  ProtocolBuilder b(h.bound);
  for (const auto& l : h.letters.names()) b.add_letter(l);
  for (const auto& s : h.states.names()) b.add_state(s);
  for (const auto& line : body) {
    const auto& t = line.head;
    if (t[0] == "query") {
      if (t.size() != 3) fail(line, "query takes a state and a letter");
      b.set_query(lookup(line, h.states, t[1], "state"), lookup(line, h.letters, t[2], "letter"));
    } else if (t[0] == "delta") {
      if (t.size() != 3) fail(line, "delta takes a state and a count");
      const StateId q = lookup(line, h.states, t[1], "state");
      const auto c = BoundedCount::from_index(parse_count(line, t[2], h.bound), h.bound);
      for (const auto& [s, l] : parse_outcomes(line)) {
        b.add_transition(q, c, {lookup(line, h.states, s, "state"), lookup_letter(line, h.letters, l)});
      }
    } else {
      fail(line, "unknown keyword '" + t[0] + "'");
    }
  }
  for (const auto& s : h.inputs) b.mark_input(b.state(s));
  for (const auto& s : h.outputs) b.mark_output(b.state(s));
  if (!h.initial.empty()) b.set_initial_letter(b.letter(h.initial));
  return b.build();
}

void write_multi_letter(std::ostream& out, const MultiLetterProtocol& p) {
  std::vector<std::string> states;
  std::vector<StateId> inputs, outputs;
  for (StateId q = 0; q < p.num_states(); ++q) {
    states.push_back(p.state_name(q));
    if (p.is_input(q)) inputs.push_back(q);
    if (p.is_output(q)) outputs.push_back(q);
  }
  const auto& letters = p.letters().names();
  out << "multi\n";
  write_common(out, p.bound(), letters, states, inputs, outputs, p.letter_name(p.initial_letter()));
  const std::uint32_t radix = p.bound() + 1;
  std::vector<std::uint8_t> v(p.num_letters(), 0);
  std::vector<Outcome> outs;
  for (StateId q = 0; q < p.num_states(); ++q) {
    const auto& obs = p.state(q).observed;
    out << "observe " << states[q];
    for (LetterId l : obs) out << ' ' << letters[l];
    out << '\n';
    std::fill(v.begin(), v.end(), 0);
    while (true) {
      p.outcomes_into(q, CountView::from_indices(v, p.bound()), outs);
      if (!outs.empty()) {
        out << "rule " << states[q];
        for (LetterId l : obs) out << ' ' << letters[l] << '=' << to_string(BoundedCount::from_index(v[l], p.bound()));
        write_outcomes(out, states, letters, outs);
      }
      std::size_t i = 0;
      for (; i < obs.size(); ++i) {
        if (++v[obs[i]] < radix) break;
        v[obs[i]] = 0;
      }
      if (i == obs.size()) break;
    }
  }
}

MultiLetterProtocol read_multi_letter(std::istream& in) {
  Header h;
  std::vector<Line> body;
  bool saw_multi = false;
  for (auto& line : read_lines(in)) {
    if (line.head.empty()) fail(line, "missing keyword");
    if (line.head[0] == "multi") {
      saw_multi = true;
      continue;
    }
    if (!read_header_line(line, h)) body.push_back(std::move(line));
  }
  if (!saw_multi) throw ParseError("missing 'multi' declaration");
  if (h.bound == 0) throw ParseError("missing bound declaration");
  std::vector<MultiLetterState> states(h.states.size());
  for (StateId q = 0; q < states.size(); ++q) states[q].name = h.states.name(q);
  const Line header_line{0, {}, {}};
  for (const auto& s : h.inputs) states[lookup(header_line, h.states, s, "state")].input = true;
  for (const auto& s : h.outputs) states[lookup(header_line, h.states, s, "state")].output = true;

  struct Condition {
    LetterId letter;
    std::uint32_t index;
    bool at_least;
  };
  for (const auto& line : body) {
    const auto& t = line.head;
    if (t[0] == "observe") {
      if (t.size() < 2) fail(line, "observe takes a state");
      auto& st = states[lookup(line, h.states, t[1], "state")];
      for (std::size_t i = 2; i < t.size(); ++i) st.observed.push_back(lookup(line, h.letters, t[i], "letter"));
    } else if (t[0] == "rule") {
      if (t.size() < 2) fail(line, "rule takes a state");
      auto& st = states[lookup(line, h.states, t[1], "state")];
      std::vector<Condition> conds;
      for (std::size_t i = 2; i < t.size(); ++i) {
        const std::string& tok = t[i];
        const bool at_least = tok.find(">=") != std::string::npos;
        const auto split = at_least ? tok.find(">=") : tok.find('=');
        if (split == std::string::npos) fail(line, "bad condition '" + tok + "'");
        const LetterId l = lookup(line, h.letters, tok.substr(0, split), "letter");
        conds.push_back({l, parse_count(line, tok.substr(split + (at_least ? 2 : 1)), h.bound), at_least});
      }
      GuardRule rule;
      rule.label = "line " + std::to_string(line.number);
      rule.guard = [conds](const CountView& v) {
        for (const auto& c : conds) {
          const auto idx = v.index(c.letter);
          if (c.at_least ? idx < c.index : idx != c.index) return false;
        }
        return true;
      };
      for (const auto& [s, l] : parse_outcomes(line)) {
        rule.outcomes.push_back({lookup(line, h.states, s, "state"), lookup_letter(line, h.letters, l)});
      }
      st.rules.push_back(std::move(rule));
    } else {
      fail(line, "unknown keyword '" + t[0] + "'");
    }
  }
  LetterId initial = kNoLetter;
  if (!h.initial.empty()) {
    auto id = h.letters.find(h.initial);
    if (!id) throw ParseError("unknown initial letter '" + h.initial + "'");
    initial = *id;
  }
  return MultiLetterProtocol(std::move(h.letters), initial, h.bound, std::move(states));
}

AnyProtocol read_any_protocol(std::istream& in) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::istringstream probe(text);
  bool multi = false;
  for (const auto& line : read_lines(probe)) {
    multi = !line.head.empty() && line.head[0] == "multi";
    break;
  }
  std::istringstream again(text);
  if (multi) return read_multi_letter(again);
  return read_protocol(again);
}

AnyProtocol load_protocol_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open protocol file " + path.string());
  return read_any_protocol(in);
}

void save_protocol_file(const std::filesystem::path& path, const AnyProtocol& p) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write protocol file " + path.string());
  std::visit(
      [&](const auto& proto) {
        if constexpr (std::is_same_v<std::decay_t<decltype(proto)>, Protocol>) {
          write_protocol(out, proto);
        } else {
          write_multi_letter(out, proto);
        }
      },
      p);
}

}  // namespace nfsm
