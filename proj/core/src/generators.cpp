#include "nfsm/generators.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>

#include "nfsm/protocol_io.hpp"
#include "nfsm/rng.hpp"

namespace nfsm {
namespace {

// Streams of draw_word used by the generators, so families never share draws.
constexpr std::uint64_t kGnpStream = 0x676e70;
constexpr std::uint64_t kTreeStream = 0x74726565;

NetworkGraph random_tree(std::size_t n, std::uint64_t seed) {
  std::vector<Edge> edges;
  if (n == 2) edges.push_back({0, 1});
  if (n <= 2) return NetworkGraph::from_edges(n, edges);
  std::vector<NodeId> code(n - 2);
  std::vector<std::uint32_t> degree(n, 1);
  for (std::size_t i = 0; i < code.size(); ++i) {
    code[i] = static_cast<NodeId>(uniform_below(draw_word(seed, kTreeStream, i), n));
    ++degree[code[i]];
  }
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> leaves;
  for (NodeId v = 0; v < n; ++v)
    if (degree[v] == 1) leaves.push(v);
  for (NodeId x : code) {
    const NodeId leaf = leaves.top();
    leaves.pop();
    edges.push_back({std::min(leaf, x), std::max(leaf, x)});
    if (--degree[x] == 1) leaves.push(x);
  }
  const NodeId a = leaves.top();
  leaves.pop();
  const NodeId b = leaves.top();
  edges.push_back({std::min(a, b), std::max(a, b)});
  return NetworkGraph::from_edges(n, edges);
}

}  // namespace

const char* family_name(GraphFamily f) {
  switch (f) {
    case GraphFamily::kPath: return "path";
    case GraphFamily::kCycle: return "cycle";
    case GraphFamily::kStar: return "star";
    case GraphFamily::kComplete: return "complete";
    case GraphFamily::kGnp: return "gnp";
    case GraphFamily::kRandomTree: return "random-tree";
    case GraphFamily::kGrid: return "grid";
  }
  return "?";
}

GraphFamily parse_family(std::string_view name) {
  for (GraphFamily f : {GraphFamily::kPath, GraphFamily::kCycle, GraphFamily::kStar, GraphFamily::kComplete,
                        GraphFamily::kGnp, GraphFamily::kRandomTree, GraphFamily::kGrid}) {
    if (name == family_name(f)) return f;
  }
  throw InvalidGraph("unknown graph family '" + std::string(name) + "'");
}

std::string GraphSpec::describe() const {
  std::ostringstream s;
  s << family_name(family) << "(n=" << n;
  if (p) s << ",p=" << *p;
  if (avg_degree) s << ",d=" << *avg_degree;
  if (width) s << ",w=" << *width;
  s << ",seed=" << seed << ")";
  return s.str();
}

NetworkGraph generate_graph(const GraphSpec& spec) {
  const std::size_t n = spec.n;
  if (n < 1) throw InvalidGraph("graph needs at least one node");
  if (n > (std::size_t{1} << 31)) throw InvalidGraph("too many nodes");
  std::vector<Edge> edges;
  auto add = [&](std::size_t u, std::size_t v) { edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)}); };
  switch (spec.family) {
    case GraphFamily::kPath:
      for (std::size_t v = 1; v < n; ++v) add(v - 1, v);
      break;
    case GraphFamily::kCycle:
      if (n < 3) throw InvalidGraph("a cycle needs at least 3 nodes");
      for (std::size_t v = 1; v < n; ++v) add(v - 1, v);
      add(0, n - 1);
      break;
    case GraphFamily::kStar:
      for (std::size_t v = 1; v < n; ++v) add(0, v);
      break;
    case GraphFamily::kComplete:
      for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) add(u, v);
      break;
    case GraphFamily::kGnp: {
      if (spec.p.has_value() == spec.avg_degree.has_value())
        throw InvalidGraph("gnp needs exactly one of p and avg-degree");
      double p = spec.p ? *spec.p : (n > 1 ? *spec.avg_degree / static_cast<double>(n - 1) : 0.0);
      if (!(p >= 0 && p <= 1)) throw InvalidGraph("gnp edge probability must lie in [0, 1]");
      for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
          const double x = uniform_open_closed(draw_word(spec.seed, kGnpStream, u * n + v));
          if (x <= p) add(u, v);
        }
      }
      break;
    }
    case GraphFamily::kRandomTree:
      return random_tree(n, spec.seed);
    case GraphFamily::kGrid: {
      std::size_t w = spec.width.value_or(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
      if (w < 1) throw InvalidGraph("grid width must be positive");
      for (std::size_t v = 0; v < n; ++v) {
        if (v % w + 1 < w && v + 1 < n) add(v, v + 1);
        if (v + w < n) add(v, v + w);
      }
      break;
    }
  }
  return NetworkGraph::from_edges(n, edges);
}

void write_graph(std::ostream& out, const NetworkGraph& g) {
  out << g.num_nodes() << ' ' << g.num_edges() << '\n';
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

NetworkGraph read_graph(std::istream& in) {
  std::size_t n = 0, m = 0;
  if (!(in >> n >> m)) throw ParseError("graph header must be `n m`");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    long long u = 0, v = 0;
    if (!(in >> u >> v)) throw ParseError("graph file ends after " + std::to_string(i) + " of " + std::to_string(m) + " edges");
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n)
      throw InvalidGraph("edge " + std::to_string(i) + " references a node outside 0.." + std::to_string(n - 1));
    if (u > v) std::swap(u, v);
    edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
  }
  std::string rest;
  if (in >> rest) throw ParseError("trailing content after " + std::to_string(m) + " edges");
  return NetworkGraph::from_edges(n, edges);
}

NetworkGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_graph(in);
}

void save_graph(const std::filesystem::path& path, const NetworkGraph& g) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_graph(out, g);
}

}  // namespace nfsm
