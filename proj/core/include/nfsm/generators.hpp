#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "nfsm/graph.hpp"

namespace nfsm {

enum class GraphFamily { kPath, kCycle, kStar, kComplete, kGnp, kRandomTree, kGrid };

const char* family_name(GraphFamily f);
GraphFamily parse_family(std::string_view name);

struct GraphSpec {
  GraphFamily family = GraphFamily::kPath;
  std::size_t n = 1;
  std::uint64_t seed = 0;
  /// gnp: edge probability, or the expected degree (p = d / (n - 1)); exactly one is set.
  std::optional<double> p;
  std::optional<double> avg_degree;
  /// grid: row length; a near-square layout when unset. The last row may be partial.
  std::optional<std::size_t> width;

  /// e.g. "gnp(n=64,d=2,seed=3)".
  std::string describe() const;
};

/// Deterministic in the spec. Random trees decode a uniform Pruefer sequence, so every
/// labeled tree is equally likely; gnp decides every pair independently.
NetworkGraph generate_graph(const GraphSpec& spec);

/// Text format: `n m`, then m lines `u v` with u < v, 0-indexed.
void write_graph(std::ostream& out, const NetworkGraph& g);
NetworkGraph read_graph(std::istream& in);
NetworkGraph load_graph(const std::filesystem::path& path);
void save_graph(const std::filesystem::path& path, const NetworkGraph& g);

}  // namespace nfsm
