#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dirpoly/dataset.hpp"

namespace dirpoly {

enum class LabelMode { kIntrinsic, kInNeighborMajority };

std::string_view label_mode_name(LabelMode mode);
LabelMode parse_label_mode(std::string_view name);

struct GenSpec {
  std::size_t num_nodes = 0;
  int num_classes = 0;
  std::size_t feature_dim = 0;
  double feature_noise = 1.0;
  // affinity[a][b]: relative rate of edges from class a to class b.
  std::vector<std::vector<double>> affinity;
  double expected_out_degree = 4.0;
  LabelMode label_mode = LabelMode::kIntrinsic;
  std::array<double, 3> split_fractions{0.5, 0.25, 0.25};
  std::size_t num_splits = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

// JSON object with the field names above; unknown keys are rejected.
GenSpec parse_gen_spec(std::string_view json_text);
std::string gen_spec_json(const GenSpec& spec);

struct Generated {
  Dataset dataset;
  std::vector<int> latent;  // class drawn for each node before relabeling
};

Generated generate_with_latent(const GenSpec& spec);
Dataset generate(const GenSpec& spec);

// ±1 code of class c: entry k is (-1)^popcount(c & (k mod P)), P = next power
// of two ≥ num_classes. Codes are orthogonal when dim is a multiple of P.
std::vector<double> class_code(int c, int num_classes, std::size_t dim);

// in_neighbor_majority task on 3000 nodes, 4 classes, 16 features.
GenSpec directional_benchmark_spec(std::uint64_t seed);

struct DatasetPair {
  Dataset directed;
  Dataset symmetrized;
};

DatasetPair directional_benchmark(std::uint64_t seed);

// Intrinsic-label task on 3000 nodes whose affinity has a zero diagonal.
GenSpec heterophilic_benchmark_spec(std::uint64_t seed);

}  // namespace dirpoly
