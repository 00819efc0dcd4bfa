#pragma once

#include <span>
#include <string>
#include <vector>

#include "dirpoly/model.hpp"

namespace dirpoly {

struct GradCheckOptions {
  double step = 1e-5;
  // Denominator floor: error = |g - fd| / max(|g|, |fd|, floor).
  double floor = 1e-6;
  // Entries probed per parameter, evenly spaced; 0 probes every entry.
  std::size_t max_entries = 0;
};

struct GradCheckResult {
  std::vector<std::pair<std::string, double>> per_parameter;  // worst entry per parameter
  double max_error = 0.0;
};

// Compares reverse-mode gradients of the mean cross-entropy over all nodes
// (dropout off) against central differences, entry by entry.
GradCheckResult gradient_check(Model& model, const DirectedGraph& g, const Matrix& x,
                               std::span<const int> labels, const GradCheckOptions& options = {});

}  // namespace dirpoly
