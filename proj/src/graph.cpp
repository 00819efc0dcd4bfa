#include "dirpoly/graph.hpp"

#include <algorithm>
#include <string>

#include "dirpoly/error.hpp"

namespace dirpoly {

namespace {

// edges must be sorted by (row, col) and unique.
CsrBlock build_csr(std::size_t num_nodes, const std::vector<Edge>& sorted) {
  CsrBlock csr;
  csr.offsets.assign(num_nodes + 1, 0);
  csr.targets.reserve(sorted.size());
  for (const auto& [row, col] : sorted) {
    ++csr.offsets[row + 1];
    csr.targets.push_back(col);
  }
  for (std::size_t v = 0; v < num_nodes; ++v) csr.offsets[v + 1] += csr.offsets[v];
  return csr;
}

std::span<const NodeId> row(const CsrBlock& csr, std::size_t num_nodes, NodeId v) {
  if (v >= num_nodes) {
    throw GraphError("node " + std::to_string(v) + " out of range for graph with " +
                     std::to_string(num_nodes) + " nodes");
  }
  return std::span<const NodeId>(csr.targets).subspan(
      csr.offsets[v], csr.offsets[v + 1] - csr.offsets[v]);
}

}  // namespace

DirectedGraph::DirectedGraph(std::size_t num_nodes, std::span<const Edge> edges)
    : num_nodes_(num_nodes) {
  std::vector<Edge> sorted(edges.begin(), edges.end());
  for (const auto& [src, dst] : sorted) {
    if (src >= num_nodes || dst >= num_nodes) {
      throw GraphError("edge (" + std::to_string(src) + "," + std::to_string(dst) +
                       ") out of range for graph with " + std::to_string(num_nodes) +
                       " nodes");
    }
  }
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  out_ = build_csr(num_nodes, sorted);

  for (auto& e : sorted) std::swap(e.first, e.second);
  std::sort(sorted.begin(), sorted.end());
  in_ = build_csr(num_nodes, sorted);
}

std::span<const NodeId> DirectedGraph::out_neighbors(NodeId v) const {
  return row(out_, num_nodes_, v);
}

std::span<const NodeId> DirectedGraph::in_neighbors(NodeId v) const {
  return row(in_, num_nodes_, v);
}

std::vector<Edge> DirectedGraph::edges() const {
  std::vector<Edge> result;
  result.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes_; ++u) {
    for (NodeId v : out_neighbors(u)) result.emplace_back(u, v);
  }
  return result;
}

DirectedGraph build_graph(std::size_t num_nodes, std::span<const Edge> edges) {
  return DirectedGraph(num_nodes, edges);
}

DirectedGraph transpose(const DirectedGraph& g) {
  auto edges = g.edges();
  for (auto& e : edges) std::swap(e.first, e.second);
  return DirectedGraph(g.num_nodes(), edges);
}

DirectedGraph symmetrize(const DirectedGraph& g) {
  auto edges = g.edges();
  const std::size_t m = edges.size();
  edges.reserve(2 * m);
  for (std::size_t i = 0; i < m; ++i) edges.emplace_back(edges[i].second, edges[i].first);
  return DirectedGraph(g.num_nodes(), edges);
}

DirectedGraph permute(const DirectedGraph& g, std::span<const NodeId> perm) {
  if (perm.size() != g.num_nodes()) throw GraphError("permutation length mismatch");
  auto edges = g.edges();
  for (auto& [u, v] : edges) {
    u = perm[u];
    v = perm[v];
  }
  return DirectedGraph(g.num_nodes(), edges);
}

}  // namespace dirpoly
