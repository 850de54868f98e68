#pragma once

#include <string>
#include <vector>

#include "nfsm/protocol.hpp"

namespace nfsm {

/// Outcome of an output verifier, with the nodes witnessing a violation.
struct Verdict {
  bool ok = true;
  std::string message;
  std::vector<NodeId> witness;

  static Verdict pass() { return {}; }
  static Verdict fail(std::string message, std::vector<NodeId> witness) {
    return {false, std::move(message), std::move(witness)};
  }
};

}  // namespace nfsm
