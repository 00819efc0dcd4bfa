#include "dirpoly/polycheck.hpp"

#include <algorithm>
#include <cmath>

#include "dirpoly/error.hpp"

namespace dirpoly {

DegreeMeasurement measure_degree(const std::function<double(double)>& f,
                                 const DegreeOptions& options) {
  if (options.points < 3) throw ConfigError("degree measurement needs at least 3 grid points");
  std::vector<double> values(options.points);
  const double centre = 0.5 * static_cast<double>(options.points - 1);
  for (std::size_t k = 0; k < options.points; ++k) {
    values[k] = f((static_cast<double>(k) - centre) * options.step);
  }
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));

  DegreeMeasurement m;
  m.relative.resize(options.points);
  std::vector<double> diff = values;
  for (std::size_t order = 0; order < options.points; ++order) {
    double peak = 0.0;
    for (double v : diff) peak = std::max(peak, std::abs(v));
    m.relative[order] = scale == 0.0 ? 0.0 : peak / (std::ldexp(1.0, static_cast<int>(order)) * scale);
    for (std::size_t k = 0; k + 1 < diff.size(); ++k) diff[k] = diff[k + 1] - diff[k];
    diff.pop_back();
  }
  m.resolved = false;
  for (std::size_t order = 0; order < options.points; ++order) {
    if (m.relative[order] < options.tolerance) {
      m.degree = order == 0 ? 0 : order - 1;
      m.resolved = true;
      break;
    }
  }
  if (!m.resolved) m.degree = options.points - 1;
  return m;
}

DegreeMeasurement polynomial_degree_check(const Model& model, const DirectedGraph& g,
                                          const Matrix& x, const Matrix& direction,
                                          std::size_t max_degree_claim,
                                          const DegreeOptions& options) {
  if (!model.attention_frozen()) {
    throw ConfigError("polynomial degree check requires frozen uniform attention");
  }
  if (model.config().sigma != Activation::kIdentity) {
    throw ConfigError("polynomial degree check requires identity activation");
  }
  if (!x.same_shape(direction)) {
    throw ShapeError("direction " + direction.shape_string() + " does not match input " +
                     x.shape_string());
  }
  if (options.node >= g.num_nodes() || options.output >= model.config().output_dim) {
    throw ConfigError("probed output coordinate out of range");
  }
  GraphContext ctx(g);
  Rng unused(0);
  auto f = [&](double t) {
    Matrix shifted = x;
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted.values()[i] += t * direction.values()[i];
    Tape tape;
    Tensor logits = model.forward(tape, ctx, Tensor::constant(std::move(shifted)), false, unused);
    return logits.value()(options.node, options.output);
  };
  DegreeMeasurement m = measure_degree(f, options);
  m.claim = max_degree_claim;
  m.within_claim = m.resolved && m.degree <= max_degree_claim;
  return m;
}

std::vector<DegreeRow> degree_table(const DirectedGraph& g, std::size_t hidden, std::size_t heads,
                                    std::uint64_t seed, const DegreeOptions& options) {
  constexpr std::size_t kInputDim = 4;
  Rng rng(seed);
  Matrix x(g.num_nodes(), kInputDim), dir(g.num_nodes(), kInputDim);
  for (double& v : x.values()) v = uniform(rng, -1.0, 1.0);
  for (double& v : dir.values()) v = uniform(rng, -1.0, 1.0);

  struct Entry {
    ModelKind kind;
    std::size_t layers;
    std::size_t claim;
    std::string label;
  };
  const Entry entries[] = {{ModelKind::kGcn, 1, 1, "gcn"},
                           {ModelKind::kPoly, 1, 2, "poly L=1"},
                           {ModelKind::kPoly, 2, 4, "poly L=2"}};
  std::vector<DegreeRow> rows;
  for (const auto& e : entries) {
    ModelConfig c;
    c.kind = e.kind;
    c.input_dim = kInputDim;
    c.output_dim = 2;
    c.hidden = hidden;
    c.layers = e.layers;
    c.heads = heads;
    c.sigma = Activation::kIdentity;
    c.dropout = 0.0;
    auto model = make_model(c);
    model->init_parameters(rng);
    model->set_attention(AttentionMode::kUniform);
    rows.push_back({e.label, polynomial_degree_check(*model, g, x, dir, e.claim, options)});
  }
  return rows;
}

}  // namespace dirpoly
