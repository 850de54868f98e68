#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nfsm/protocol.hpp"

namespace nfsm {

class InvalidGraph : public Error {
 public:
  using Error::Error;
};

using Edge = std::pair<NodeId, NodeId>;

/// Finite simple undirected graph on nodes 0..n-1 in CSR form with sorted neighbor
/// lists. Arc (v, k) is v's port for its k-th neighbor; `reverse_arc` maps it to the
/// arc at that neighbor pointing back at v.
class NetworkGraph {
 public:
  NetworkGraph() = default;

  /// Throws InvalidGraph on self-loops, duplicate edges or out-of-range ids.
  static NetworkGraph from_edges(std::size_t n, std::span<const Edge> edges);
  static NetworkGraph from_edges(std::size_t n, const std::vector<Edge>& edges) {
    return from_edges(n, std::span<const Edge>(edges));
  }

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const { return adjacency_.size() / 2; }
  std::size_t num_arcs() const { return adjacency_.size(); }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::uint32_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  std::uint32_t arc_begin(NodeId v) const { return offsets_[v]; }
  NodeId arc_target(std::uint32_t arc) const { return adjacency_[arc]; }
  std::uint32_t reverse_arc(std::uint32_t arc) const { return reverse_[arc]; }
  bool has_edge(NodeId u, NodeId v) const;
  /// Arc index at v for neighbor u; throws InvalidGraph when u is not adjacent.
  std::uint32_t arc_of(NodeId v, NodeId u) const;

  /// Every edge once, as (u, v) with u < v, sorted.
  std::vector<Edge> edges() const;

  bool is_connected() const;
  bool is_tree() const { return num_nodes() > 0 && num_edges() + 1 == num_nodes() && is_connected(); }

  friend bool operator==(const NetworkGraph& a, const NetworkGraph& b) {
    return a.offsets_ == b.offsets_ && a.adjacency_ == b.adjacency_;
  }

 private:
  std::vector<std::uint32_t> offsets_;
  std::vector<NodeId> adjacency_;
  std::vector<std::uint32_t> reverse_;
};

}  // namespace nfsm
