#pragma once

// Dense, loop-based re-implementations of the convolutions and networks used
// as oracles. Nothing here touches the Tape.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dirpoly/model.hpp"
#include "test_util.hpp"

namespace dirpoly::reference {

using Dense = std::vector<std::vector<long>>;

inline Matrix matmul(const Matrix& a, const Matrix& b) { return testing::dense_matmul(a, b); }

inline Matrix add(const Matrix& a, const Matrix& b) {
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] += b.values()[i];
  return c;
}

// receives_from[i][j] = 1 when j is in i's attended neighborhood.
inline Dense neighborhood(const DirectedGraph& g, Direction d) {
  Dense a = testing::dense_adjacency(g);
  const std::size_t n = a.size();
  Dense r(n, std::vector<long>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) r[i][j] = d == Direction::kFromInNeighbors ? a[j][i] : a[i][j];
  return r;
}

inline Matrix gcn(const DirectedGraph& g, const Matrix& x, const Matrix& w) {
  Dense a = testing::dense_adjacency(g);
  const std::size_t n = a.size();
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && a[j][i]) deg[i] += 1;
  Matrix prop(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    prop(i, i) = 1.0 / (deg[i] + 1.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && a[j][i]) prop(i, j) = 1.0 / std::sqrt((deg[i] + 1) * (deg[j] + 1));
  }
  return matmul(prop, matmul(x, w));
}

struct GatParams {
  Matrix w, att_src, att_dst;
};

// Dense attention matrices alpha[h](i, j) for receiver i, neighbor j.
inline std::vector<Matrix> gat_attention(const Dense& nb, const Matrix& z, const GatParams& p,
                                         bool uniform) {
  const std::size_t n = nb.size(), heads = p.att_src.rows(), dim = p.att_src.cols();
  std::vector<Matrix> alpha(heads, Matrix(n, n));
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> e(n, 0.0);
      double mx = -1e300;
      int count = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!nb[i][j]) continue;
        ++count;
        double s = 0.0;
        for (std::size_t k = 0; k < dim; ++k)
          s += p.att_src(h, k) * z(j, h * dim + k) + p.att_dst(h, k) * z(i, h * dim + k);
        e[j] = s > 0 ? s : 0.2 * s;
        mx = std::max(mx, e[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (nb[i][j]) total += std::exp(e[j] - mx);
      for (std::size_t j = 0; j < n; ++j) {
        if (!nb[i][j]) continue;
        alpha[h](i, j) = uniform ? 1.0 / count : std::exp(e[j] - mx) / total;
      }
    }
  }
  return alpha;
}

inline Matrix gat(const DirectedGraph& g, Direction d, const Matrix& x, const GatParams& p,
                  bool uniform = false) {
  Dense nb = neighborhood(g, d);
  Matrix z = matmul(x, p.w);
  auto alpha = gat_attention(nb, z, p, uniform);
  const std::size_t n = nb.size(), heads = p.att_src.rows(), dim = p.att_src.cols();
  Matrix out(n, heads * dim);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < dim; ++k) out(i, h * dim + k) += alpha[h](i, j) * z(j, h * dim + k);
  return out;
}

inline std::map<std::string, Matrix> param_map(const Model& m) {
  std::map<std::string, Matrix> out;
  for (const auto& p : m.parameters()) out[p.name] = p.tensor.value();
  return out;
}

inline GatParams gat_params(const std::map<std::string, Matrix>& pm, const std::string& prefix) {
  return {pm.at(prefix + "weight"), pm.at(prefix + "att_src"), pm.at(prefix + "att_dst")};
}

inline double act(double v, Activation a) {
  switch (a) {
    case Activation::kRelu: return v > 0 ? v : 0;
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-v));
    case Activation::kIdentity: return v;
  }
  return v;
}

// Straight-line evaluation of the Poly / Dir-Poly recurrence (eval mode).
inline Matrix poly(const Model& model, const DirectedGraph& g, const Matrix& x, bool uniform = false) {
  const auto& cfg = model.config();
  auto pm = param_map(model);
  Matrix h = matmul(x, pm.at("w_in"));
  Matrix local(h.rows(), h.cols());
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const std::string p = "layer" + std::to_string(i) + ".";
    Matrix conv;
    if (cfg.kind == ModelKind::kDirPoly) {
      Matrix m_in = gat(g, Direction::kFromInNeighbors, h, gat_params(pm, p + "conv.in."), uniform);
      Matrix m_out = gat(g, Direction::kFromOutNeighbors, h, gat_params(pm, p + "conv.out."), uniform);
      conv = add(matmul(m_in, pm.at(p + "conv.comb_in")), matmul(m_out, pm.at(p + "conv.comb_out")));
    } else {
      conv = gat(g, cfg.direction, h, gat_params(pm, p + "conv."), uniform);
    }
    Matrix xp = add(conv, matmul(h, pm.at(p + "w_l")));
    Matrix gate = matmul(h, pm.at(p + "w_h"));
    const double beta = 1.0 / (1.0 + std::exp(-pm.at(p + "beta_raw")(0, 0)));
    Matrix next(h.rows(), h.cols());
    for (std::size_t r = 0; r < next.rows(); ++r)
      for (std::size_t c = 0; c < next.cols(); ++c) {
        const double hv = act(gate(r, c), cfg.sigma);
        next(r, c) = (1.0 - beta) * (hv * xp(r, c)) + beta * xp(r, c);
      }
    h = next;
    local = add(local, h);
  }
  return matmul(local, pm.at("w_out"));
}

}  // namespace dirpoly::reference
