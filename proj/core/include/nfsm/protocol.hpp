#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nfsm/bounded_count.hpp"

namespace nfsm {

using StateId = std::uint32_t;
using LetterId = std::uint32_t;
using NodeId = std::uint32_t;

/// The empty transmission.
inline constexpr LetterId kEpsilon = std::numeric_limits<LetterId>::max();
/// Marks an unassigned query letter in a protocol under construction.
inline constexpr LetterId kNoLetter = kEpsilon - 1;

struct Outcome {
  StateId next = 0;
  LetterId letter = kEpsilon;

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidProtocol : public Error {
 public:
  using Error::Error;
};

/// Interned names with reverse lookup. Ids are dense and assigned in insertion order.
class NameTable {
 public:
  std::uint32_t add(std::string name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Raw tables of a single-letter-query protocol <Q, Q_I, Q_O, Sigma, sigma_0, b, lambda, delta>.
/// `offsets` has num_states * (bound + 1) + 1 entries; the outcomes of delta(q, c) are
/// outcomes[offsets[q * (b+1) + c.index(b)] .. offsets[... + 1]).
struct ProtocolData {
  NameTable states;
  NameTable letters;
  std::vector<bool> input;
  std::vector<bool> output;
  LetterId initial_letter = kNoLetter;
  std::uint32_t bound = 1;
  std::vector<LetterId> query;
  std::vector<std::uint32_t> offsets;
  std::vector<Outcome> outcomes;
};

/// An immutable nFSM protocol with single-letter queries. Carries no graph reference.
class Protocol {
 public:
  Protocol() = default;
  explicit Protocol(ProtocolData data);

  std::size_t num_states() const { return data_.states.size(); }
  std::size_t num_letters() const { return data_.letters.size(); }
  std::uint32_t bound() const { return data_.bound; }
  LetterId initial_letter() const { return data_.initial_letter; }
  LetterId query(StateId q) const { return data_.query[q]; }
  bool is_input(StateId q) const { return data_.input[q]; }
  bool is_output(StateId q) const { return data_.output[q]; }

  std::span<const Outcome> transition(StateId q, BoundedCount c) const {
    return transition_at(q, c.index(data_.bound));
  }
  std::span<const Outcome> transition_at(StateId q, std::uint32_t count_index) const {
    const std::size_t row = static_cast<std::size_t>(q) * (data_.bound + 1) + count_index;
    return {data_.outcomes.data() + data_.offsets[row], data_.offsets[row + 1] - data_.offsets[row]};
  }

  const std::string& state_name(StateId q) const { return data_.states.name(q); }
  const std::string& letter_name(LetterId l) const;
  std::optional<StateId> find_state(std::string_view name) const { return data_.states.find(name); }
  std::optional<LetterId> find_letter(std::string_view name) const { return data_.letters.find(name); }

  std::vector<StateId> input_states() const;
  std::vector<StateId> output_states() const;

  /// True when delta(q, c) = {(q, eps)} for every q in Q_O and every c.
  bool outputs_absorbing() const;

  const ProtocolData& data() const { return data_; }

 private:
  ProtocolData data_;
};

/// Incremental construction of a Protocol; nothing is validated until validate_protocol.
class ProtocolBuilder {
 public:
  explicit ProtocolBuilder(std::uint32_t bound) { data_.bound = bound; }

  StateId add_state(std::string name);
  LetterId add_letter(std::string name);
  StateId state(std::string_view name) const;
  LetterId letter(std::string_view name) const;

  ProtocolBuilder& set_initial_letter(LetterId l);
  ProtocolBuilder& mark_input(StateId q);
  ProtocolBuilder& mark_output(StateId q);
  ProtocolBuilder& set_query(StateId q, LetterId l);
  ProtocolBuilder& add_transition(StateId q, BoundedCount c, Outcome o);

  Protocol build() const;

 private:
  ProtocolData data_;
  std::map<std::pair<StateId, std::uint32_t>, std::vector<Outcome>> delta_;
};

/// How rule coverage of a multi-letter protocol was established.
enum class CoverageMethod { kNotApplicable, kExhaustive, kSampled };

struct ValidationReport {
  std::vector<std::string> violations;
  CoverageMethod coverage = CoverageMethod::kNotApplicable;

  bool ok() const { return violations.empty(); }
};

ValidationReport validate_protocol(const Protocol& p);

/// Throws InvalidProtocol listing every violation.
void require_valid(const ValidationReport& report, std::string_view what);

}  // namespace nfsm
