#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nfsm/protocol.hpp"

namespace nfsm {

/// Read access to the bounded count vector <f_b(#sigma)>_sigma seen by a node.
///
/// Backed either by raw port counts (engine) or by count indices in B (compilers,
/// enumeration); the saturation happens on access.
class CountView {
 public:
  static CountView from_raw(std::span<const std::uint32_t> raw, std::uint32_t bound) {
    return CountView(raw.data(), nullptr, raw.size(), bound);
  }
  static CountView from_indices(std::span<const std::uint8_t> indices, std::uint32_t bound) {
    return CountView(nullptr, indices.data(), indices.size(), bound);
  }

  std::size_t size() const { return size_; }
  std::uint32_t bound() const { return bound_; }

  BoundedCount operator[](LetterId l) const { return BoundedCount::from_index(index(l), bound_); }
  std::uint32_t index(LetterId l) const {
    if (raw_ != nullptr) return raw_[l] >= bound_ ? bound_ : raw_[l];
    return indices_[l];
  }
  bool zero(LetterId l) const { return index(l) == 0; }
  bool present(LetterId l) const { return index(l) != 0; }

 private:
  CountView(const std::uint32_t* raw, const std::uint8_t* indices, std::size_t size, std::uint32_t bound)
      : raw_(raw), indices_(indices), size_(size), bound_(bound) {}

  const std::uint32_t* raw_;
  const std::uint8_t* indices_;
  std::size_t size_;
  std::uint32_t bound_;
};

using Guard = std::function<bool(const CountView&)>;

/// One guarded transition: when `guard` holds, `outcomes` are candidates.
struct GuardRule {
  std::string label;
  Guard guard;
  std::vector<Outcome> outcomes;
};

struct MultiLetterState {
  std::string name;
  bool input = false;
  bool output = false;
  /// Letters whose counts the rules of this state may depend on. The compiler folds
  /// only these; validate_protocol checks the rules really ignore every other letter.
  std::vector<LetterId> observed;
  std::vector<GuardRule> rules;
};

/// A protocol with multiple-letter queries for a locally synchronous environment.
/// delta(q, v) is the union, in rule order and without duplicates, of the outcomes of
/// every rule of q whose guard holds on v.
class MultiLetterProtocol {
 public:
  MultiLetterProtocol(NameTable letters, LetterId initial_letter, std::uint32_t bound,
                      std::vector<MultiLetterState> states);

  std::size_t num_states() const { return states_.size(); }
  std::size_t num_letters() const { return letters_.size(); }
  std::uint32_t bound() const { return bound_; }
  LetterId initial_letter() const { return initial_letter_; }
  bool assumes_locally_synchronous() const { return true; }

  bool is_input(StateId q) const { return states_[q].input; }
  bool is_output(StateId q) const { return states_[q].output; }
  const MultiLetterState& state(StateId q) const { return states_[q]; }
  const std::string& state_name(StateId q) const { return states_[q].name; }
  const std::string& letter_name(LetterId l) const;
  std::optional<StateId> find_state(std::string_view name) const;
  std::optional<LetterId> find_letter(std::string_view name) const { return letters_.find(name); }
  const NameTable& letters() const { return letters_; }

  std::vector<StateId> input_states() const;

  void outcomes_into(StateId q, const CountView& counts, std::vector<Outcome>& out) const;
  std::vector<Outcome> outcomes(StateId q, const CountView& counts) const;

 private:
  NameTable letters_;
  LetterId initial_letter_;
  std::uint32_t bound_;
  std::vector<MultiLetterState> states_;
  NameTable state_names_;
};

/// Checks the type invariants and rule coverage. Coverage is enumerated over B^Sigma
/// when that space has at most `exhaustive_limit` points and sampled otherwise; the
/// observed-letter contract is checked the same way.
ValidationReport validate_protocol(const MultiLetterProtocol& p, std::uint64_t exhaustive_limit = 1'000'000,
                                   std::uint64_t samples_per_state = 4096);

}  // namespace nfsm
