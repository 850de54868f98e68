#pragma once

#include <cstdint>
#include <vector>

#include "nfsm/multi_letter.hpp"
#include "nfsm/protocol.hpp"

namespace nfsm {

class CompilationCapExceeded : public Error {
 public:
  using Error::Error;
};

struct MultiLetterCompileOptions {
  std::size_t max_states = 4'000'000;
};

/// Where a state of the lowered protocol came from.
struct SubroundAnnotation {
  StateId source = 0;
  /// Subround k: the state queries letter k.
  std::uint32_t subround = 0;
  /// Count indices folded so far, one per observed letter below k.
  std::vector<std::uint8_t> partial;
};

struct MultiLetterCompilation {
  Protocol protocol;
  std::vector<SubroundAnnotation> annotations;
  /// Lowered state for each source state entering a round: (q, 0, empty).
  std::vector<StateId> entry_state;
  std::size_t subrounds = 0;
  /// |Q| * |Sigma| * (b+1)^|Sigma|, saturated at SIZE_MAX.
  std::size_t state_bound = 0;

  StateId source_of(StateId q) const { return annotations[q].source; }
};

/// Splits every round into |Sigma| subrounds; subround k queries letter k and folds its
/// count into the state. Only letters the source state observes are carried, so the
/// state space stays polynomial in practice. The last subround applies the source rules
/// and transmits; every other subround transmits eps.
MultiLetterCompilation compile_multi_letter(const MultiLetterProtocol& p, const MultiLetterCompileOptions& opts = {});

}  // namespace nfsm
