#include "nfsm/graph.hpp"

#include <algorithm>
#include <string>

namespace nfsm {

NetworkGraph NetworkGraph::from_edges(std::size_t n, std::span<const Edge> edges) {
  if (n > std::numeric_limits<NodeId>::max() / 2) throw InvalidGraph("graph too large");
  NetworkGraph g;
  g.offsets_.assign(n + 1, 0);
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) {
      throw InvalidGraph("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") out of range for n=" +
                         std::to_string(n));
    }
    if (u == v) throw InvalidGraph("self-loop at node " + std::to_string(u));
    ++g.offsets_[u + 1];
    ++g.offsets_[v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.adjacency_.resize(g.offsets_[n]);
  std::vector<std::uint32_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& [u, v] : edges) {
    g.adjacency_[fill[u]++] = v;
    g.adjacency_[fill[v]++] = u;
  }
  for (std::size_t v = 0; v < n; ++v) {
    auto first = g.adjacency_.begin() + g.offsets_[v];
    auto last = g.adjacency_.begin() + g.offsets_[v + 1];
    std::sort(first, last);
    if (auto dup = std::adjacent_find(first, last); dup != last) {
      throw InvalidGraph("duplicate edge (" + std::to_string(std::min<std::size_t>(v, *dup)) + ", " +
                         std::to_string(std::max<std::size_t>(v, *dup)) + ")");
    }
  }
  g.reverse_.resize(g.adjacency_.size());
  for (NodeId v = 0; v < n; ++v) {
    for (std::uint32_t a = g.offsets_[v]; a < g.offsets_[v + 1]; ++a) g.reverse_[a] = g.arc_of(g.adjacency_[a], v);
  }
  return g;
}

bool NetworkGraph::has_edge(NodeId u, NodeId v) const {
  if (u >= num_nodes() || v >= num_nodes()) return false;
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::uint32_t NetworkGraph::arc_of(NodeId v, NodeId u) const {
  auto nb = neighbors(v);
  auto it = std::lower_bound(nb.begin(), nb.end(), u);
  if (it == nb.end() || *it != u) {
    throw InvalidGraph("nodes " + std::to_string(v) + " and " + std::to_string(u) + " are not adjacent");
  }
  return offsets_[v] + static_cast<std::uint32_t>(it - nb.begin());
}

std::vector<Edge> NetworkGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

bool NetworkGraph::is_connected() const {
  const std::size_t n = num_nodes();
  if (n == 0) return true;
  std::vector<bool> seen(n, false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    for (NodeId u : neighbors(v)) {
      if (!seen[u]) {
        seen[u] = true;
        ++reached;
        stack.push_back(u);
      }
    }
  }
  return reached == n;
}

}  // namespace nfsm
