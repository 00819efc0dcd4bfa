#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dirpoly/graph.hpp"
#include "dirpoly/matrix.hpp"

namespace dirpoly {

enum class Task { kMulticlassAccuracy, kBinaryRocAuc };

std::string_view task_name(Task task);
Task parse_task(std::string_view name);

using Mask = std::vector<std::uint8_t>;

struct Split {
  Mask train;
  Mask val;
  Mask test;

  bool operator==(const Split&) const = default;
};

struct Dataset {
  DirectedGraph graph;
  Matrix features;  // N x d
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<Split> splits;
  Task task = Task::kMulticlassAccuracy;

  std::size_t num_nodes() const { return graph.num_nodes(); }

  // Throws Error describing the first violated invariant.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

std::vector<NodeId> mask_indices(const Mask& mask);

// Directory container: manifest.json, edges.csv, features.csv, labels.csv,
// splits.csv. Node indices are 0-based; floats use shortest round-trip form.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Same dataset with node v relabeled perm[v] (graph, features, labels, masks).
Dataset permute_dataset(const Dataset& dataset, std::span<const NodeId> perm);

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace dirpoly
