#include "test_support.hpp"

#include "nfsm/coloring.hpp"
#include "nfsm/mis.hpp"

namespace nfsm::testing {

const Pipeline& mis_pipeline() {
  static const Pipeline pl = build_pipeline(build_mis_protocol());
  return pl;
}

const Pipeline& coloring_pipeline() {
  static const Pipeline pl = build_pipeline(build_coloring_protocol());
  return pl;
}

}  // namespace nfsm::testing
