#include "dirpoly/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dirpoly {

GradCheckResult gradient_check(Model& model, const DirectedGraph& g, const Matrix& x,
                               std::span<const int> labels, const GradCheckOptions& options) {
  const GraphContext ctx(g);
  std::vector<NodeId> rows(g.num_nodes());
  std::iota(rows.begin(), rows.end(), NodeId{0});
  const Tensor input = Tensor::constant(x);
  Rng unused(0);
  auto params = model.parameters();
  auto loss = [&](bool grad) {
    Tape tape;
    Tensor logits = model.forward(tape, ctx, input, false, unused);
    Tensor l = tape.cross_entropy_logits(logits, labels, rows);
    if (grad) tape.backward(l);
    return l.item();
  };
  for (auto& p : params) p.tensor.zero_grad();
  loss(true);

  GradCheckResult result;
  for (auto& p : params) {
    const Matrix analytic = p.tensor.grad();
    auto& values = p.tensor.mutable_value().values();
    double worst = 0.0;
    const std::size_t n = values.size();
    const std::size_t probes = options.max_entries == 0 ? n : std::min(n, options.max_entries);
    for (std::size_t k = 0; k < probes; ++k) {
      const std::size_t i = k * n / probes;
      const double orig = values[i];
      values[i] = orig + options.step;
      const double fp = loss(false);
      values[i] = orig - options.step;
      const double fm = loss(false);
      values[i] = orig;
      const double fd = (fp - fm) / (2.0 * options.step);
      const double g_i = analytic.values()[i];
      const double denom = std::max({std::abs(fd), std::abs(g_i), options.floor});
      worst = std::max(worst, std::abs(fd - g_i) / denom);
    }
    result.per_parameter.emplace_back(p.name, worst);
    result.max_error = std::max(result.max_error, worst);
  }
  return result;
}

}  // namespace dirpoly
