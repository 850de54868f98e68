#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace nfsm {

/// A value of B = {0, 1, ..., b-1, SAT}.
///
/// The saturation symbol is its own variant and never aliases the integer b,
/// so arithmetic on a saturated count has to go through f_bounded_sum.
class BoundedCount {
 public:
  constexpr BoundedCount() = default;

  static constexpr BoundedCount exact(std::uint32_t value) { return BoundedCount(Kind::kExact, value); }
  static constexpr BoundedCount saturated() { return BoundedCount(Kind::kSaturated, 0); }

  constexpr bool is_saturated() const { return kind_ == Kind::kSaturated; }

  // Precondition: !is_saturated().
  constexpr std::uint32_t value() const { return value_; }

  // Position in B: exact values map to themselves, SAT maps to b.
  constexpr std::uint32_t index(std::uint32_t bound) const { return is_saturated() ? bound : value_; }

  static constexpr BoundedCount from_index(std::uint32_t index, std::uint32_t bound) {
    return index >= bound ? saturated() : exact(index);
  }

  friend constexpr bool operator==(BoundedCount a, BoundedCount b) {
    return a.kind_ == b.kind_ && (a.is_saturated() || a.value_ == b.value_);
  }

  friend constexpr std::strong_ordering operator<=>(BoundedCount a, BoundedCount b) {
    if (a.is_saturated() || b.is_saturated()) {
      return static_cast<int>(a.is_saturated()) <=> static_cast<int>(b.is_saturated());
    }
    return a.value_ <=> b.value_;
  }

 private:
  enum class Kind : std::uint8_t { kExact, kSaturated };

  constexpr BoundedCount(Kind kind, std::uint32_t value) : kind_(kind), value_(value) {}

  Kind kind_ = Kind::kExact;
  std::uint32_t value_ = 0;
};

/// f_b(x): x if x <= b-1, SAT otherwise.
constexpr BoundedCount f_bounded(std::uint64_t x, std::uint32_t bound) {
  return x < bound ? BoundedCount::exact(static_cast<std::uint32_t>(x)) : BoundedCount::saturated();
}

/// Saturating addition in B, i.e. f_b(x + y) computed from f_b(x) and f_b(y).
constexpr BoundedCount f_bounded_sum(BoundedCount u, BoundedCount v, std::uint32_t bound) {
  if (u.is_saturated() || v.is_saturated()) return BoundedCount::saturated();
  return f_bounded(static_cast<std::uint64_t>(u.value()) + v.value(), bound);
}

/// "0".."b-1" or "sat"; the same spelling the protocol text format uses.
std::string to_string(BoundedCount c);

}  // namespace nfsm
