#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dirpoly/graph.hpp"
#include "dirpoly/matrix.hpp"
#include "dirpoly/random.hpp"

namespace dirpoly {

class Tape;

namespace detail {
struct TensorNode {
  Matrix value;
  Matrix grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
  const Tape* tape = nullptr;  // producing tape; null for leaves
};
}  // namespace detail

// Shared handle to a dense value participating in reverse-mode
// differentiation. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);

  bool defined() const { return node_ != nullptr; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() != 0 || value().size() == 0; }
  // Zero-filled matrix when nothing has been accumulated yet.
  Matrix grad() const;
  void zero_grad() { node_->grad = Matrix(); }

 private:
  friend class Tape;
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;
};

// Records executed operations in order and replays their adjoints in reverse.
// One tape is a single-threaded unit of work; backward may run once per reset.
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // When enabled every op scans its output and throws NumericError on NaN/Inf.
  // Enabled by default in debug builds only.
  void set_check_finite(bool on) { check_finite_ = on; }
  bool check_finite() const { return check_finite_; }

  Tensor matmul(const Tensor& a, const Tensor& b);
  // Same shape, or b a 1 x cols row vector broadcast over rows.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double c);
  // s must be 1x1; returns s * a.
  Tensor scale_by(const Tensor& a, const Tensor& s);
  Tensor concat_cols(const Tensor& a, const Tensor& b);
  Tensor relu(const Tensor& a);
  Tensor sigmoid(const Tensor& a);
  Tensor leaky_relu(const Tensor& a, double slope = 0.2);
  Tensor tanh(const Tensor& a);
  Tensor sum(const Tensor& a);

  // out[e] = a[index[e]]
  Tensor gather_rows(const Tensor& a, std::span<const NodeId> index);
  // out[r] = weights[r] * a[r] with constant weights.
  Tensor scale_rows(const Tensor& a, std::span<const double> weights);
  // z: R x (H*D), att: H x D. out[r,h] = <z[r, h*D:(h+1)*D], att[h]>.
  Tensor head_dot(const Tensor& z, const Tensor& att);
  // x: R x (H*D), w: R x H. Scales head block h of row r by w[r,h].
  Tensor head_scale(const Tensor& x, const Tensor& w);

  // Softmax over rows sharing a segment id, independently per column.
  Tensor segment_softmax(const Tensor& scores, std::span<const NodeId> segment_of,
                         std::size_t num_segments);
  // Row s of the result sums message rows with segment id s (ascending row order).
  Tensor segment_sum(const Tensor& messages, std::span<const NodeId> segment_of,
                     std::size_t num_segments);

  // Mean negative log-likelihood over the selected rows.
  Tensor cross_entropy_logits(const Tensor& logits, std::span<const int> labels,
                              std::span<const NodeId> rows);
  Tensor bce_logits(const Tensor& logits, std::span<const int> labels,
                    std::span<const NodeId> rows);

  Tensor dropout(const Tensor& x, double rate, bool train, Rng& rng);

  // Seeds d(loss)/d(loss) = 1 and accumulates into every requires_grad tensor
  // reachable from loss.
  void backward(const Tensor& loss);
  void reset();
  std::size_t size() const { return records_.size(); }

 private:
  struct Record {
    const char* op;
    std::function<void()> backward;
  };

  Tensor make_output(const char* op, Matrix value, std::initializer_list<const Tensor*> inputs);
  void record(const char* op, std::function<void()> fn) { records_.push_back({op, std::move(fn)}); }

  std::vector<Record> records_;
  bool consumed_ = false;
  bool check_finite_;
};

}  // namespace dirpoly
