#include "nfsm/bounded_count.hpp"

namespace nfsm {

std::string to_string(BoundedCount c) { return c.is_saturated() ? std::string("sat") : std::to_string(c.value()); }

}  // namespace nfsm
