#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace dirpoly {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

// Compressed sparse row block: neighbors of row v are
// targets[offsets[v] .. offsets[v+1]), sorted ascending.
struct CsrBlock {
  std::vector<std::size_t> offsets;
  std::vector<NodeId> targets;
};

// Immutable directed graph. Holds the adjacency A (out_csr) and its
// transpose (in_csr), both built once at construction.
class DirectedGraph {
 public:
  DirectedGraph() : DirectedGraph(0, {}) {}

  // Deduplicates edges and sorts neighbor lists. Self-loops are kept as given.
  // Throws GraphError naming the first edge with an out-of-range endpoint.
  DirectedGraph(std::size_t num_nodes, std::span<const Edge> edges);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return out_.targets.size(); }

  std::span<const NodeId> out_neighbors(NodeId v) const;
  std::span<const NodeId> in_neighbors(NodeId v) const;
  std::size_t out_degree(NodeId v) const { return out_neighbors(v).size(); }
  std::size_t in_degree(NodeId v) const { return in_neighbors(v).size(); }

  const CsrBlock& out_csr() const { return out_; }
  const CsrBlock& in_csr() const { return in_; }

  // Edges in (src, dst) lexicographic order.
  std::vector<Edge> edges() const;

  bool operator==(const DirectedGraph& other) const {
    return num_nodes_ == other.num_nodes_ && out_.offsets == other.out_.offsets &&
           out_.targets == other.out_.targets;
  }

 private:
  std::size_t num_nodes_;
  CsrBlock out_;
  CsrBlock in_;
};

DirectedGraph build_graph(std::size_t num_nodes, std::span<const Edge> edges);

DirectedGraph transpose(const DirectedGraph& g);

// Edge set E ∪ Eᵀ.
DirectedGraph symmetrize(const DirectedGraph& g);

// Relabels node v as perm[v]. perm must be a permutation of [0, N).
DirectedGraph permute(const DirectedGraph& g, std::span<const NodeId> perm);

}  // namespace dirpoly
