#include "nfsm/protocol.hpp"

#include <algorithm>
#include <sstream>

namespace nfsm {

std::uint32_t NameTable::add(std::string name) {
  if (auto it = index_.find(name); it != index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  return id;
}

std::optional<std::uint32_t> NameTable::find(std::string_view name) const {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  return std::nullopt;
}

Protocol::Protocol(ProtocolData data) : data_(std::move(data)) {
  const std::size_t n = data_.states.size();
  data_.input.resize(n, false);
  data_.output.resize(n, false);
  data_.query.resize(n, kNoLetter);
  const std::size_t rows = n * (data_.bound + 1);
  if (data_.offsets.size() != rows + 1) {
    throw InvalidProtocol("protocol transition table has " + std::to_string(data_.offsets.size()) +
                          " offsets, expected " + std::to_string(rows + 1));
  }
}

const std::string& Protocol::letter_name(LetterId l) const {
  static const std::string eps = "eps";
  if (l == kEpsilon) return eps;
  return data_.letters.name(l);
}

std::vector<StateId> Protocol::input_states() const {
  std::vector<StateId> out;
  for (StateId q = 0; q < num_states(); ++q)
    if (is_input(q)) out.push_back(q);
  return out;
}

std::vector<StateId> Protocol::output_states() const {
  std::vector<StateId> out;
  for (StateId q = 0; q < num_states(); ++q)
    if (is_output(q)) out.push_back(q);
  return out;
}

bool Protocol::outputs_absorbing() const {
  for (StateId q = 0; q < num_states(); ++q) {
    if (!is_output(q)) continue;
    for (std::uint32_t c = 0; c <= bound(); ++c) {
      auto outs = transition_at(q, c);
      if (outs.size() != 1 || outs[0].next != q || outs[0].letter != kEpsilon) return false;
    }
  }
  return true;
}

StateId ProtocolBuilder::add_state(std::string name) {
  const auto before = data_.states.size();
  const StateId id = data_.states.add(std::move(name));
  if (data_.states.size() != before) {
    data_.input.push_back(false);
    data_.output.push_back(false);
    data_.query.push_back(kNoLetter);
  }
  return id;
}

LetterId ProtocolBuilder::add_letter(std::string name) { return data_.letters.add(std::move(name)); }

StateId ProtocolBuilder::state(std::string_view name) const {
  if (auto id = data_.states.find(name)) return *id;
  throw InvalidProtocol("unknown state '" + std::string(name) + "'");
}

LetterId ProtocolBuilder::letter(std::string_view name) const {
  if (name == "eps") return kEpsilon;
  if (auto id = data_.letters.find(name)) return *id;
  throw InvalidProtocol("unknown letter '" + std::string(name) + "'");
}

ProtocolBuilder& ProtocolBuilder::set_initial_letter(LetterId l) {
  data_.initial_letter = l;
  return *this;
}

ProtocolBuilder& ProtocolBuilder::mark_input(StateId q) {
  data_.input.at(q) = true;
  return *this;
}

ProtocolBuilder& ProtocolBuilder::mark_output(StateId q) {
  data_.output.at(q) = true;
  return *this;
}

ProtocolBuilder& ProtocolBuilder::set_query(StateId q, LetterId l) {
  data_.query.at(q) = l;
  return *this;
}

ProtocolBuilder& ProtocolBuilder::add_transition(StateId q, BoundedCount c, Outcome o) {
  auto& outs = delta_[{q, c.index(data_.bound)}];
  if (std::find(outs.begin(), outs.end(), o) == outs.end()) outs.push_back(o);
  return *this;
}

Protocol ProtocolBuilder::build() const {
  ProtocolData data = data_;
  const std::size_t rows = data.states.size() * (data.bound + 1);
  data.offsets.assign(rows + 1, 0);
  data.outcomes.clear();
  std::size_t row = 0;
  for (StateId q = 0; q < data.states.size(); ++q) {
    for (std::uint32_t c = 0; c <= data.bound; ++c, ++row) {
      data.offsets[row] = static_cast<std::uint32_t>(data.outcomes.size());
      if (auto it = delta_.find({q, c}); it != delta_.end()) {
        data.outcomes.insert(data.outcomes.end(), it->second.begin(), it->second.end());
      }
    }
  }
  data.offsets[rows] = static_cast<std::uint32_t>(data.outcomes.size());
  return Protocol(std::move(data));
}

ValidationReport validate_protocol(const Protocol& p) {
  ValidationReport report;
  auto& v = report.violations;
  const auto& d = p.data();
  if (d.bound < 1) v.push_back("bound must be a positive integer");
  if (p.num_states() == 0) v.push_back("state set is empty");
  if (p.num_letters() == 0) v.push_back("alphabet is empty");
  if (d.initial_letter >= p.num_letters()) v.push_back("initial letter is not in the alphabet");
  if (p.input_states().empty()) v.push_back("input state set is empty");
  for (StateId q = 0; q < p.num_states(); ++q) {
    if (d.query[q] >= p.num_letters()) v.push_back("query letter missing for state '" + p.state_name(q) + "'");
    for (std::uint32_t c = 0; c <= d.bound; ++c) {
      auto outs = p.transition_at(q, c);
      const std::string where = "(" + p.state_name(q) + ", " + to_string(BoundedCount::from_index(c, d.bound)) + ")";
      if (outs.empty()) v.push_back("empty transition image at " + where);
      for (const Outcome& o : outs) {
        if (o.next >= p.num_states()) v.push_back("transition at " + where + " targets an unknown state");
        if (o.letter != kEpsilon && o.letter >= p.num_letters())
          v.push_back("transition at " + where + " transmits an unknown letter");
      }
    }
  }
  return report;
}

void require_valid(const ValidationReport& report, std::string_view what) {
  if (report.ok()) return;
  std::ostringstream msg;
  msg << what << " is invalid:";
  for (const auto& s : report.violations) msg << "\n  " << s;
  throw InvalidProtocol(msg.str());
}

}  // namespace nfsm
