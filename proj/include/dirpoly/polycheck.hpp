#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dirpoly/model.hpp"

namespace dirpoly {

struct DegreeOptions {
  double step = 0.5;          // grid spacing in t
  std::size_t points = 14;    // grid size; degrees up to points-2 are resolvable
  double tolerance = 1e-6;    // relative magnitude below which a difference vanishes
  NodeId node = 0;            // output coordinate probed
  std::size_t output = 0;
};

struct DegreeMeasurement {
  std::size_t degree = 0;
  // relative[m] = max_k |Δ^m f(t_k)| / (2^m max_k |f(t_k)|), m = 0..points-1.
  std::vector<double> relative;
  bool resolved = true;      // false when no difference on the grid vanished
  std::size_t claim = 0;
  bool within_claim = true;
};

// Empirical polynomial degree of a scalar function of t: the smallest k whose
// (k+1)-th forward difference on a centred grid is below tolerance.
DegreeMeasurement measure_degree(const std::function<double(double)>& f,
                                 const DegreeOptions& options);

// Degree of t -> logits(x + t·direction)[node, output] for a model with
// frozen (uniform) attention, identity activation and dropout off.
// Throws ConfigError when the model is not in that state.
DegreeMeasurement polynomial_degree_check(const Model& model, const DirectedGraph& g,
                                          const Matrix& x, const Matrix& direction,
                                          std::size_t max_degree_claim,
                                          const DegreeOptions& options = {});

struct DegreeRow {
  std::string model;  // e.g. "poly L=2"
  DegreeMeasurement measurement;
};

// GCN, Poly L=1 and Poly L=2 under the frozen harness on one random input.
// Claims: 1 for GCN, 2^L for Poly.
std::vector<DegreeRow> degree_table(const DirectedGraph& g, std::size_t hidden, std::size_t heads,
                                    std::uint64_t seed, const DegreeOptions& options = {});

}  // namespace dirpoly
