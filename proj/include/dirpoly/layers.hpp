#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dirpoly/graph.hpp"
#include "dirpoly/random.hpp"
#include "dirpoly/tensor.hpp"

namespace dirpoly {

enum class Activation { kRelu, kSigmoid, kIdentity };

// Which neighborhood a receiver attends over: in-neighbors (edges j->i) or
// out-neighbors (edges i->j, i.e. the transposed edge set).
enum class Direction { kFromInNeighbors, kFromOutNeighbors };

// kUniform replaces learned attention by plain neighborhood averaging.
enum class AttentionMode { kLearned, kUniform };

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

// Edge list grouped by receiver: message e flows source[e] -> receiver[e].
// Receivers ascend, and within a receiver sources ascend.
struct MessageIndex {
  std::vector<NodeId> source;
  std::vector<NodeId> receiver;
  std::vector<double> inv_degree;  // per message: 1 / |neighborhood(receiver)|
};

MessageIndex build_message_index(const DirectedGraph& g, Direction direction);

// Symmetric-normalized propagation over in-neighbors plus one self-loop per
// node: c_ij = 1/sqrt((d_i+1)(d_j+1)), d = in-degree ignoring self-loops.
struct GcnPropagation {
  std::vector<NodeId> source;
  std::vector<NodeId> receiver;
  std::vector<double> weight;
};

GcnPropagation build_gcn_propagation(const DirectedGraph& g);

// Per-graph structures shared by every layer of a forward pass.
struct GraphContext {
  explicit GraphContext(const DirectedGraph& g);

  std::size_t num_nodes;
  MessageIndex from_in;
  MessageIndex from_out;
  GcnPropagation gcn;

  const MessageIndex& messages(Direction d) const {
    return d == Direction::kFromInNeighbors ? from_in : from_out;
  }
};

Tensor activate(Tape& tape, const Tensor& x, Activation a);

// Glorot-uniform matrix, bound sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng, std::size_t fan_in,
                      std::size_t fan_out);
inline Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  return glorot_uniform(rows, cols, rng, rows, cols);
}

class GcnConv {
 public:
  GcnConv(std::size_t in_dim, std::size_t out_dim);

  Tensor forward(Tape& tape, const GraphContext& ctx, const Tensor& x) const;
  void init(Rng& rng);
  void collect(const std::string& prefix, std::vector<NamedParameter>& out) const;

  const Tensor& weight() const { return weight_; }

 private:
  Tensor weight_;
};

class Conv {
 public:
  virtual ~Conv() = default;
  virtual Tensor forward(Tape& tape, const GraphContext& ctx, const Tensor& x) const = 0;
  virtual void init(Rng& rng) = 0;
  virtual void collect(const std::string& prefix, std::vector<NamedParameter>& out) const = 0;
  virtual void set_attention(AttentionMode mode) = 0;
  virtual AttentionMode attention() const = 0;
};

// Multi-head additive attention over one neighborhood direction:
// e_ji = LeakyReLU(a_src·z_j + a_dst·z_i) per head, softmax over the
// receiver's neighborhood, output the attention-weighted sum of z_j with
// heads concatenated. Receivers with an empty neighborhood output zeros.
class GatConv : public Conv {
 public:
  GatConv(std::size_t in_dim, std::size_t out_dim, std::size_t heads, Direction direction);

  Tensor forward(Tape& tape, const GraphContext& ctx, const Tensor& x) const override;
  void init(Rng& rng) override;
  void collect(const std::string& prefix, std::vector<NamedParameter>& out) const override;
  void set_attention(AttentionMode mode) override { mode_ = mode; }
  AttentionMode attention() const override { return mode_; }

  // Attention coefficients (|E| x heads) in message-index order.
  Matrix attention_weights(const GraphContext& ctx, const Matrix& x) const;

  Direction direction() const { return direction_; }
  std::size_t heads() const { return heads_; }
  Tensor& weight() { return weight_; }
  Tensor& att_src() { return att_src_; }
  Tensor& att_dst() { return att_dst_; }

 private:
  Tensor scores(Tape& tape, const MessageIndex& idx, const Tensor& z) const;

  std::size_t heads_;
  Direction direction_;
  AttentionMode mode_ = AttentionMode::kLearned;
  Tensor weight_;   // in_dim x out_dim
  Tensor att_src_;  // heads x (out_dim / heads)
  Tensor att_dst_;
};

// Separate attention over in- and out-neighborhoods, combined linearly:
// m_in W_comb_in + m_out W_comb_out.
class DirGatConv : public Conv {
 public:
  DirGatConv(std::size_t in_dim, std::size_t out_dim, std::size_t heads);

  Tensor forward(Tape& tape, const GraphContext& ctx, const Tensor& x) const override;
  void init(Rng& rng) override;
  void collect(const std::string& prefix, std::vector<NamedParameter>& out) const override;
  void set_attention(AttentionMode mode) override;
  AttentionMode attention() const override { return conv_in_.attention(); }

  GatConv& conv_in() { return conv_in_; }
  GatConv& conv_out() { return conv_out_; }
  Tensor& comb_in() { return comb_in_; }
  Tensor& comb_out() { return comb_out_; }

 private:
  GatConv conv_in_;
  GatConv conv_out_;
  Tensor comb_in_;
  Tensor comb_out_;
};

}  // namespace dirpoly
