#pragma once

#include <cstdint>

namespace nfsm {

/// Counter-based randomness: every draw is a pure function of (seed, stream, index),
/// so runs are replayable and two executions can be made to consume identical draws.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t draw_word(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return mix64(mix64(mix64(seed) ^ stream) + index);
}

__extension__ using uint128 = unsigned __int128;

/// Uniform in [0, n) for n >= 1 (multiply-shift; the bias is below n / 2^64).
inline std::uint64_t uniform_below(std::uint64_t word, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<uint128>(word) * n) >> 64);
}

/// Uniform in (0, 1].
inline double uniform_open_closed(std::uint64_t word) {
  return 1.0 - static_cast<double>(word >> 11) * 0x1.0p-53;
}

}  // namespace nfsm
