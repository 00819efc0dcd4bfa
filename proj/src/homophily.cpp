#include "dirpoly/homophily.hpp"

#include <cstdint>

#include "dirpoly/dataset.hpp"

namespace dirpoly {

namespace {

void check_labels(const DirectedGraph& g, std::span<const int> labels) {
  if (labels.size() != g.num_nodes()) {
    throw ShapeError("labels length " + std::to_string(labels.size()) + " does not match " +
                     std::to_string(g.num_nodes()) + " nodes");
  }
}

struct RowCounts {
  std::uint64_t same = 0;
  std::uint64_t total = 0;
};

// Accumulates Σ_j s_ij I[y_i = y_j] and Σ_j s_ij for row i by walk expansion.
RowCounts row_counts(const DirectedGraph& g, std::span<const int> labels, NodeId i,
                     MessageMatrix kind) {
  RowCounts rc;
  const int yi = labels[i];
  auto visit = [&](NodeId j) {
    ++rc.total;
    if (labels[j] == yi) ++rc.same;
  };
  switch (kind) {
    case MessageMatrix::kA:
      for (NodeId j : g.out_neighbors(i)) visit(j);
      break;
    case MessageMatrix::kAT:
      for (NodeId j : g.in_neighbors(i)) visit(j);
      break;
    case MessageMatrix::kASym: {
      // Merge of two sorted lists, counting shared neighbors once.
      auto out = g.out_neighbors(i);
      auto in = g.in_neighbors(i);
      std::size_t a = 0, b = 0;
      while (a < out.size() || b < in.size()) {
        if (b == in.size() || (a < out.size() && out[a] < in[b])) {
          visit(out[a++]);
        } else if (a == out.size() || in[b] < out[a]) {
          visit(in[b++]);
        } else {
          visit(out[a]);
          ++a;
          ++b;
        }
      }
      break;
    }
    case MessageMatrix::kA2:
      for (NodeId k : g.out_neighbors(i))
        for (NodeId j : g.out_neighbors(k)) visit(j);
      break;
    case MessageMatrix::kATA:
      for (NodeId k : g.in_neighbors(i))
        for (NodeId j : g.out_neighbors(k)) visit(j);
      break;
    case MessageMatrix::kAAT:
      for (NodeId k : g.out_neighbors(i))
        for (NodeId j : g.in_neighbors(k)) visit(j);
      break;
  }
  return rc;
}

}  // namespace

std::string_view message_matrix_name(MessageMatrix kind) {
  switch (kind) {
    case MessageMatrix::kA: return "A";
    case MessageMatrix::kAT: return "A_T";
    case MessageMatrix::kASym: return "A_sym";
    case MessageMatrix::kA2: return "A2";
    case MessageMatrix::kATA: return "AT_A";
    case MessageMatrix::kAAT: return "A_AT";
  }
  return "?";
}

double node_homophily(const DirectedGraph& g, std::span<const int> labels) {
  check_labels(g, labels);
  double sum = 0.0;
  std::size_t counted = 0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    auto nbrs = g.out_neighbors(i);
    if (nbrs.empty()) continue;
    std::uint64_t same = 0;
    for (NodeId j : nbrs) same += labels[j] == labels[i];
    sum += static_cast<double>(same) / static_cast<double>(nbrs.size());
    ++counted;
  }
  if (counted == 0) throw HomophilyUndefined();
  return sum / static_cast<double>(counted);
}

double weighted_node_homophily(const DirectedGraph& g, std::span<const int> labels,
                               MessageMatrix kind) {
  check_labels(g, labels);
  double sum = 0.0;
  std::size_t counted = 0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    RowCounts rc = row_counts(g, labels, i, kind);
    if (rc.total == 0) continue;
    sum += static_cast<double>(rc.same) / static_cast<double>(rc.total);
    ++counted;
  }
  if (counted == 0) throw HomophilyUndefined();
  return sum / static_cast<double>(counted);
}

std::vector<HomophilyEntry> homophily_report(const Dataset& dataset) {
  std::vector<HomophilyEntry> report;
  for (MessageMatrix kind : kAllMessageMatrices) {
    HomophilyEntry entry{kind, std::nullopt};
    try {
      entry.value = weighted_node_homophily(dataset.graph, dataset.labels, kind);
    } catch (const HomophilyUndefined&) {
    }
    report.push_back(entry);
  }
  return report;
}

std::string homophily_csv(const std::vector<HomophilyEntry>& report) {
  std::string out = "matrix,homophily\n";
  for (const auto& e : report) {
    out += message_matrix_name(e.kind);
    out += ',';
    out += e.value ? format_double(*e.value) : "NA";
    out += '\n';
  }
  return out;
}

}  // namespace dirpoly
