#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dirpoly/dataset.hpp"
#include "dirpoly/error.hpp"
#include "dirpoly/graph.hpp"

namespace dirpoly {

class HomophilyUndefined : public Error {
 public:
  HomophilyUndefined() : Error("homophily undefined") {}
};

// Message-passing matrices S whose entries s_ij count (possibly 2-hop) walks
// from i to j. A_sym is the binary adjacency of E ∪ Eᵀ.
enum class MessageMatrix { kA, kAT, kASym, kA2, kATA, kAAT };

inline constexpr std::array<MessageMatrix, 6> kAllMessageMatrices = {
    MessageMatrix::kA,  MessageMatrix::kAT,  MessageMatrix::kASym,
    MessageMatrix::kA2, MessageMatrix::kATA, MessageMatrix::kAAT};

std::string_view message_matrix_name(MessageMatrix kind);

// Mean over nodes with out-degree >= 1 of the fraction of out-neighbors that
// share the node's label. Zero out-degree nodes are excluded.
double node_homophily(const DirectedGraph& g, std::span<const int> labels);

// Weighted node homophily under S; nodes whose row of S sums to zero are
// excluded from the mean.
double weighted_node_homophily(const DirectedGraph& g, std::span<const int> labels,
                               MessageMatrix kind);

struct HomophilyEntry {
  MessageMatrix kind;
  std::optional<double> value;  // nullopt when undefined
};

std::vector<HomophilyEntry> homophily_report(const Dataset& dataset);

// "matrix,homophily" CSV, undefined entries written as NA.
std::string homophily_csv(const std::vector<HomophilyEntry>& report);

}  // namespace dirpoly
