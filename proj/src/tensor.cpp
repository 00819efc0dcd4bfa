#include "dirpoly/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "dirpoly/error.hpp"

namespace dirpoly {

namespace {

using Node = detail::TensorNode;
using NodePtr = std::shared_ptr<Node>;
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<RowMajor>;
using MapC = Eigen::Map<const RowMajor>;

MapC view(const Matrix& m) { return MapC(m.data(), m.rows(), m.cols()); }
MapR view(Matrix& m) { return MapR(m.data(), m.rows(), m.cols()); }

Matrix& grad_of(Node& n) {
  if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

bool has_grad(const Node& n) { return n.grad.size() != 0; }

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                   b.shape_string());
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.value().same_shape(b.value())) shape_error(op, a.value(), b.value());
}

void check_segments(const char* op, std::size_t rows, std::span<const NodeId> seg,
                    std::size_t num_segments) {
  if (seg.size() != rows) {
    throw ShapeError(std::string(op) + ": segment index length " + std::to_string(seg.size()) +
                     " does not match " + std::to_string(rows) + " rows");
  }
  for (NodeId s : seg) {
    if (s >= num_segments) {
      throw ShapeError(std::string(op) + ": segment id " + std::to_string(s) + " out of range");
    }
  }
}

void check_rows(const char* op, std::span<const NodeId> rows, std::size_t n) {
  for (NodeId r : rows) {
    if (r >= n) throw ShapeError(std::string(op) + ": row " + std::to_string(r) + " out of range");
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor Tensor::constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Tensor(std::move(n));
}

double Tensor::item() const {
  if (value().size() != 1) throw ShapeError("item() on non-scalar tensor " + value().shape_string());
  return value().values()[0];
}

Matrix Tensor::grad() const {
  if (node_->grad.size() == 0) return Matrix(rows(), cols());
  return node_->grad;
}

Tape::Tape() {
#ifdef NDEBUG
  check_finite_ = false;
#else
  check_finite_ = true;
#endif
}

Tensor Tape::make_output(const char* op, Matrix value,
                         std::initializer_list<const Tensor*> inputs) {
  if (check_finite_) {
    for (double v : value.values()) {
      if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->tape = this;
  for (const Tensor* t : inputs) n->requires_grad = n->requires_grad || t->requires_grad();
  return Tensor(std::move(n));
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
  Matrix out(a.rows(), b.cols());
  if (out.size() != 0) view(out).noalias() = view(a.value()) * view(b.value());
  Tensor y = make_output("matmul", std::move(out), {&a, &b});
  if (y.requires_grad()) {
    record("matmul", [an = a.node_, bn = b.node_, yn = y.node_] {
      if (!has_grad(*yn)) return;
      if (an->requires_grad) view(grad_of(*an)).noalias() += view(yn->grad) * view(bn->value).transpose();
      if (bn->requires_grad) view(grad_of(*bn)).noalias() += view(an->value).transpose() * view(yn->grad);
    });
  }
  return y;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  const bool broadcast = b.rows() == 1 && a.rows() != 1 && b.cols() == a.cols();
  if (!broadcast) require_same("add", a, b);
  Matrix out = a.value();
  const std::size_t c = out.cols();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values()[i] += b.value().values()[broadcast ? i % c : i];
  }
  Tensor y = make_output("add", std::move(out), {&a, &b});
  if (y.requires_grad()) {
    record("add", [an = a.node_, bn = b.node_, yn = y.node_, broadcast, c] {
      if (!has_grad(*yn)) return;
      const auto& g = yn->grad.values();
      if (an->requires_grad) {
        auto& ga = grad_of(*an).values();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (bn->requires_grad) {
        auto& gb = grad_of(*bn).values();
        for (std::size_t i = 0; i < g.size(); ++i) gb[broadcast ? i % c : i] += g[i];
      }
    });
  }
  return y;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same("sub", a, b);
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] -= b.value().values()[i];
  Tensor y = make_output("sub", std::move(out), {&a, &b});
  if (y.requires_grad()) {
    record("sub", [an = a.node_, bn = b.node_, yn = y.node_] {
      if (!has_grad(*yn)) return;
      const auto& g = yn->grad.values();
      if (an->requires_grad) {
        auto& ga = grad_of(*an).values();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (bn->requires_grad) {
        auto& gb = grad_of(*bn).values();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return y;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.value().values()[i];
  Tensor y = make_output("mul", std::move(out), {&a, &b});
  if (y.requires_grad()) {
    record("mul", [an = a.node_, bn = b.node_, yn = y.node_] {
      if (!has_grad(*yn)) return;
      const auto& g = yn->grad.values();
      if (an->requires_grad) {
        auto& ga = grad_of(*an).values();
        const auto& vb = bn->value.values();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
      }
      if (bn->requires_grad) {
        auto& gb = grad_of(*bn).values();
        const auto& va = an->value.values();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
      }
    });
  }
  return y;
}

Tensor Tape::scale(const Tensor& a, double c) {
  Matrix out = a.value();
  for (double& v : out.values()) v *= c;
  Tensor y = make_output("scale", std::move(out), {&a});
  if (y.requires_grad()) {
    record("scale", [an = a.node_, yn = y.node_, c] {
      if (!has_grad(*yn)) return;
      const auto& g = yn->grad.values();
      auto& ga = grad_of(*an).values();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    });
  }
  return y;
}

Tensor Tape::scale_by(const Tensor& a, const Tensor& s) {
  if (s.value().size() != 1) shape_error("scale_by", a.value(), s.value());
  const double c = s.value().values()[0];
  Matrix out = a.value();
  for (double& v : out.values()) v *= c;
  Tensor y = make_output("scale_by", std::move(out), {&a, &s});
  if (y.requires_grad()) {
    record("scale_by", [an = a.node_, sn = s.node_, yn = y.node_] {
      if (!has_grad(*yn)) return;
      const auto& g = yn->grad.values();
      const double c = sn->value.values()[0];
      if (an->requires_grad) {
        auto& ga = grad_of(*an).values();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
      }
      if (sn->requires_grad) {
        const auto& va = an->value.values();
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * va[i];
        grad_of(*sn).values()[0] += acc;
      }
    });
  }
  return y;
}

Tensor Tape::concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) shape_error("concat_cols", a.value(), b.value());
  const std::size_t ca = a.cols(), cb = b.cols();
  Matrix out(a.rows(), ca + cb);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy_n(a.value().row(r).data(), ca, out.row(r).data());
    std::copy_n(b.value().row(r).data(), cb, out.row(r).data() + ca);
  }
  Tensor y = make_output("concat_cols", std::move(out), {&a, &b});
  if (y.requires_grad()) {
    record("concat_cols", [an = a.node_, bn = b.node_, yn = y.node_, ca, cb] {
      if (!has_grad(*yn)) return;
      for (std::size_t r = 0; r < yn->grad.rows(); ++r) {
        auto g = yn->grad.row(r);
        if (an->requires_grad) {
          auto ga = grad_of(*an).row(r);
          for (std::size_t k = 0; k < ca; ++k) ga[k] += g[k];
        }
        if (bn->requires_grad) {
          auto gb = grad_of(*bn).row(r);
          for (std::size_t k = 0; k < cb; ++k) gb[k] += g[ca + k];
        }
      }
    });
  }
  return y;
}

// Elementwise ops whose derivative is a function of the input x and output fx.
#define DIRPOLY_UNARY(NAME, FWD, DERIV)                                                  \
  Tensor Tape::NAME(const Tensor& a) {                                                   \
    Matrix out = a.value();                                                              \
    for (double& x : out.values()) x = (FWD);                                            \
    Tensor y = make_output(#NAME, std::move(out), {&a});                                 \
    if (y.requires_grad()) {                                                             \
      record(#NAME, [an = a.node_, yn = y.node_] {                                       \
        if (!has_grad(*yn)) return;                                                      \
        const auto& g = yn->grad.values();                                               \
        const auto& in = an->value.values();                                             \
        const auto& out = yn->value.values();                                            \
        auto& ga = grad_of(*an).values();                                                \
        for (std::size_t i = 0; i < g.size(); ++i) {                                     \
          const double x = in[i];                                                        \
          const double fx = out[i];                                                      \
          (void)x;                                                                       \
          (void)fx;                                                                      \
          ga[i] += g[i] * (DERIV);                                                       \
        }                                                                                \
      });                                                                                \
    }                                                                                    \
    return y;                                                                            \
  }

DIRPOLY_UNARY(relu, x > 0.0 ? x : 0.0, x > 0.0 ? 1.0 : 0.0)
DIRPOLY_UNARY(sigmoid, logistic(x), fx * (1.0 - fx))
DIRPOLY_UNARY(tanh, std::tanh(x), 1.0 - fx * fx)

#undef DIRPOLY_UNARY

Tensor Tape::leaky_relu(const Tensor& a, double slope) {
  Matrix out = a.value();
  for (double& x : out.values()) x = x > 0.0 ? x : slope * x;
  Tensor y = make_output("leaky_relu", std::move(out), {&a});
  if (y.requires_grad()) {
    record("leaky_relu", [an = a.node_, yn = y.node_, slope] {
      if (!has_grad(*yn)) return;
      const auto& g = yn->grad.values();
      const auto& in = an->value.values();
      auto& ga = grad_of(*an).values();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (in[i] > 0.0 ? 1.0 : slope);
    });
  }
  return y;
}

Tensor Tape::sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  Tensor y = make_output("sum", Matrix(1, 1, s), {&a});
  if (y.requires_grad()) {
    record("sum", [an = a.node_, yn = y.node_] {
      if (!has_grad(*yn)) return;
      const double g = yn->grad.values()[0];
      for (double& v : grad_of(*an).values()) v += g;
    });
  }
  return y;
}

Tensor Tape::gather_rows(const Tensor& a, std::span<const NodeId> index) {
  check_rows("gather_rows", index, a.rows());
  const std::size_t c = a.cols();
  Matrix out(index.size(), c);
  for (std::size_t e = 0; e < index.size(); ++e) {
    std::copy_n(a.value().row(index[e]).data(), c, out.row(e).data());
  }
  Tensor y = make_output("gather_rows", std::move(out), {&a});
  if (y.requires_grad()) {
    record("gather_rows",
           [an = a.node_, yn = y.node_, idx = std::vector<NodeId>(index.begin(), index.end()), c] {
             if (!has_grad(*yn)) return;
             Matrix& ga = grad_of(*an);
             for (std::size_t e = 0; e < idx.size(); ++e) {
               const double* g = yn->grad.row(e).data();
               double* dst = ga.row(idx[e]).data();
               for (std::size_t k = 0; k < c; ++k) dst[k] += g[k];
             }
           });
  }
  return y;
}

Tensor Tape::scale_rows(const Tensor& a, std::span<const double> weights) {
  if (weights.size() != a.rows()) {
    throw ShapeError("scale_rows: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(a.rows()) + " rows");
  }
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (double& v : out.row(r)) v *= weights[r];
  Tensor y = make_output("scale_rows", std::move(out), {&a});
  if (y.requires_grad()) {
    record("scale_rows", [an = a.node_, yn = y.node_,
                          w = std::vector<double>(weights.begin(), weights.end())] {
      if (!has_grad(*yn)) return;
      Matrix& ga = grad_of(*an);
      for (std::size_t r = 0; r < ga.rows(); ++r) {
        auto g = yn->grad.row(r);
        auto dst = ga.row(r);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += w[r] * g[k];
      }
    });
  }
  return y;
}

Tensor Tape::head_dot(const Tensor& z, const Tensor& att) {
  const std::size_t heads = att.rows(), dim = att.cols();
  if (heads * dim != z.cols()) shape_error("head_dot", z.value(), att.value());
  Matrix out(z.rows(), heads);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const double* zr = z.value().row(r).data();
    for (std::size_t h = 0; h < heads; ++h) {
      double acc = 0.0;
      const double* ah = att.value().row(h).data();
      for (std::size_t k = 0; k < dim; ++k) acc += zr[h * dim + k] * ah[k];
      out(r, h) = acc;
    }
  }
  Tensor y = make_output("head_dot", std::move(out), {&z, &att});
  if (y.requires_grad()) {
    record("head_dot", [zn = z.node_, an = att.node_, yn = y.node_, heads, dim] {
      if (!has_grad(*yn)) return;
      for (std::size_t r = 0; r < zn->value.rows(); ++r) {
        for (std::size_t h = 0; h < heads; ++h) {
          const double g = yn->grad(r, h);
          if (zn->requires_grad) {
            double* gz = grad_of(*zn).row(r).data() + h * dim;
            const double* ah = an->value.row(h).data();
            for (std::size_t k = 0; k < dim; ++k) gz[k] += g * ah[k];
          }
          if (an->requires_grad) {
            double* ga = grad_of(*an).row(h).data();
            const double* zr = zn->value.row(r).data() + h * dim;
            for (std::size_t k = 0; k < dim; ++k) ga[k] += g * zr[k];
          }
        }
      }
    });
  }
  return y;
}

Tensor Tape::head_scale(const Tensor& x, const Tensor& w) {
  const std::size_t heads = w.cols();
  if (w.rows() != x.rows() || heads == 0 || x.cols() % heads != 0) {
    shape_error("head_scale", x.value(), w.value());
  }
  const std::size_t dim = x.cols() / heads;
  Matrix out = x.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t k = 0; k < dim; ++k) out(r, h * dim + k) *= w.value()(r, h);
  Tensor y = make_output("head_scale", std::move(out), {&x, &w});
  if (y.requires_grad()) {
    record("head_scale", [xn = x.node_, wn = w.node_, yn = y.node_, heads, dim] {
      if (!has_grad(*yn)) return;
      for (std::size_t r = 0; r < xn->value.rows(); ++r) {
        for (std::size_t h = 0; h < heads; ++h) {
          const double* g = yn->grad.row(r).data() + h * dim;
          if (xn->requires_grad) {
            double* gx = grad_of(*xn).row(r).data() + h * dim;
            const double wr = wn->value(r, h);
            for (std::size_t k = 0; k < dim; ++k) gx[k] += g[k] * wr;
          }
          if (wn->requires_grad) {
            const double* xr = xn->value.row(r).data() + h * dim;
            double acc = 0.0;
            for (std::size_t k = 0; k < dim; ++k) acc += g[k] * xr[k];
            grad_of(*wn)(r, h) += acc;
          }
        }
      }
    });
  }
  return y;
}

Tensor Tape::segment_softmax(const Tensor& scores, std::span<const NodeId> segment_of,
                             std::size_t num_segments) {
  check_segments("segment_softmax", scores.rows(), segment_of, num_segments);
  const std::size_t rows = scores.rows(), heads = scores.cols();
  const Matrix& s = scores.value();
  Matrix seg_max(num_segments, heads, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < rows; ++e)
    for (std::size_t h = 0; h < heads; ++h)
      seg_max(segment_of[e], h) = std::max(seg_max(segment_of[e], h), s(e, h));
  Matrix out(rows, heads);
  Matrix seg_sum(num_segments, heads);
  for (std::size_t e = 0; e < rows; ++e) {
    for (std::size_t h = 0; h < heads; ++h) {
      out(e, h) = std::exp(s(e, h) - seg_max(segment_of[e], h));
      seg_sum(segment_of[e], h) += out(e, h);
    }
  }
  for (std::size_t e = 0; e < rows; ++e)
    for (std::size_t h = 0; h < heads; ++h) out(e, h) /= seg_sum(segment_of[e], h);

  Tensor y = make_output("segment_softmax", std::move(out), {&scores});
  if (y.requires_grad()) {
    record("segment_softmax",
           [sn = scores.node_, yn = y.node_,
            seg = std::vector<NodeId>(segment_of.begin(), segment_of.end()), num_segments] {
             if (!has_grad(*yn)) return;
             const Matrix& a = yn->value;
             const Matrix& g = yn->grad;
             const std::size_t heads = a.cols();
             Matrix dot(num_segments, heads);
             for (std::size_t e = 0; e < seg.size(); ++e)
               for (std::size_t h = 0; h < heads; ++h) dot(seg[e], h) += a(e, h) * g(e, h);
             Matrix& gs = grad_of(*sn);
             for (std::size_t e = 0; e < seg.size(); ++e)
               for (std::size_t h = 0; h < heads; ++h)
                 gs(e, h) += a(e, h) * (g(e, h) - dot(seg[e], h));
           });
  }
  return y;
}

Tensor Tape::segment_sum(const Tensor& messages, std::span<const NodeId> segment_of,
                         std::size_t num_segments) {
  check_segments("segment_sum", messages.rows(), segment_of, num_segments);
  const std::size_t c = messages.cols();
  Matrix out(num_segments, c);
  for (std::size_t e = 0; e < segment_of.size(); ++e) {
    const double* src = messages.value().row(e).data();
    double* dst = out.row(segment_of[e]).data();
    for (std::size_t k = 0; k < c; ++k) dst[k] += src[k];
  }
  Tensor y = make_output("segment_sum", std::move(out), {&messages});
  if (y.requires_grad()) {
    record("segment_sum",
           [mn = messages.node_, yn = y.node_,
            seg = std::vector<NodeId>(segment_of.begin(), segment_of.end()), c] {
             if (!has_grad(*yn)) return;
             Matrix& gm = grad_of(*mn);
             for (std::size_t e = 0; e < seg.size(); ++e) {
               const double* g = yn->grad.row(seg[e]).data();
               double* dst = gm.row(e).data();
               for (std::size_t k = 0; k < c; ++k) dst[k] += g[k];
             }
           });
  }
  return y;
}

Tensor Tape::cross_entropy_logits(const Tensor& logits, std::span<const int> labels,
                                  std::span<const NodeId> rows) {
  if (rows.empty()) throw Error("cross_entropy_logits: empty mask");
  if (labels.size() != logits.rows()) {
    throw ShapeError("cross_entropy_logits: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  check_rows("cross_entropy_logits", rows, logits.rows());
  const Matrix& z = logits.value();
  const std::size_t c = z.cols();
  Matrix probs(rows.size(), c);
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto zr = z.row(rows[i]);
    const int y = labels[rows[i]];
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw ShapeError("cross_entropy_logits: label " + std::to_string(y) + " out of range");
    }
    const double m = *std::max_element(zr.begin(), zr.end());
    double se = 0.0;
    for (std::size_t k = 0; k < c; ++k) se += std::exp(zr[k] - m);
    const double lse = m + std::log(se);
    total += lse - zr[y];
    for (std::size_t k = 0; k < c; ++k) probs(i, k) = std::exp(zr[k] - lse);
  }
  const double n = static_cast<double>(rows.size());
  Tensor y = make_output("cross_entropy_logits", Matrix(1, 1, total / n), {&logits});
  if (y.requires_grad()) {
    record("cross_entropy_logits",
           [ln = logits.node_, yn = y.node_, probs = std::move(probs),
            r = std::vector<NodeId>(rows.begin(), rows.end()),
            lab = std::vector<int>(labels.begin(), labels.end()), n] {
             if (!has_grad(*yn)) return;
             const double g = yn->grad.values()[0] / n;
             Matrix& gl = grad_of(*ln);
             for (std::size_t i = 0; i < r.size(); ++i) {
               auto dst = gl.row(r[i]);
               for (std::size_t k = 0; k < dst.size(); ++k) {
                 dst[k] += g * (probs(i, k) - (static_cast<int>(k) == lab[r[i]] ? 1.0 : 0.0));
               }
             }
           });
  }
  return y;
}

Tensor Tape::bce_logits(const Tensor& logits, std::span<const int> labels,
                        std::span<const NodeId> rows) {
  if (rows.empty()) throw Error("bce_logits: empty mask");
  if (logits.cols() != 1) throw ShapeError("bce_logits: expected N x 1 logits, got " +
                                           logits.value().shape_string());
  if (labels.size() != logits.rows()) {
    throw ShapeError("bce_logits: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  check_rows("bce_logits", rows, logits.rows());
  double total = 0.0;
  for (NodeId r : rows) {
    const double x = logits.value()(r, 0);
    total += softplus(x) - (labels[r] == 1 ? x : 0.0);
  }
  const double n = static_cast<double>(rows.size());
  Tensor y = make_output("bce_logits", Matrix(1, 1, total / n), {&logits});
  if (y.requires_grad()) {
    record("bce_logits", [ln = logits.node_, yn = y.node_,
                          r = std::vector<NodeId>(rows.begin(), rows.end()),
                          lab = std::vector<int>(labels.begin(), labels.end()), n] {
      if (!has_grad(*yn)) return;
      const double g = yn->grad.values()[0] / n;
      Matrix& gl = grad_of(*ln);
      for (NodeId row : r) {
        gl(row, 0) += g * (logistic(ln->value(row, 0)) - (lab[row] == 1 ? 1.0 : 0.0));
      }
    });
  }
  return y;
}

Tensor Tape::dropout(const Tensor& x, double rate, bool train, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout: rate must be in [0,1)");
  if (!train || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.value().size());
  for (double& m : mask) m = uniform01(rng) < rate ? 0.0 : keep_scale;
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= mask[i];
  Tensor y = make_output("dropout", std::move(out), {&x});
  if (y.requires_grad()) {
    record("dropout", [xn = x.node_, yn = y.node_, mask = std::move(mask)] {
      if (!has_grad(*yn)) return;
      const auto& g = yn->grad.values();
      auto& gx = grad_of(*xn).values();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    });
  }
  return y;
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw Error("backward called twice without resetting the tape");
  if (loss.value().size() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + loss.value().shape_string());
  }
  if (loss.node_->tape != this) throw Error("backward: loss was not produced by this tape");
  consumed_ = true;
  if (!loss.requires_grad()) return;
  grad_of(*loss.node_).values()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->backward();
}

void Tape::reset() {
  records_.clear();
  consumed_ = false;
}

}  // namespace dirpoly
