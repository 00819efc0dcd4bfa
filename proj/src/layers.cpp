#include "dirpoly/layers.hpp"

#include <cmath>

#include "dirpoly/error.hpp"

namespace dirpoly {

MessageIndex build_message_index(const DirectedGraph& g, Direction direction) {
  MessageIndex idx;
  idx.source.reserve(g.num_edges());
  idx.receiver.reserve(g.num_edges());
  idx.inv_degree.reserve(g.num_edges());
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    auto nbrs = direction == Direction::kFromInNeighbors ? g.in_neighbors(i) : g.out_neighbors(i);
    const double inv = nbrs.empty() ? 0.0 : 1.0 / static_cast<double>(nbrs.size());
    for (NodeId j : nbrs) {
      idx.source.push_back(j);
      idx.receiver.push_back(i);
      idx.inv_degree.push_back(inv);
    }
  }
  return idx;
}

GcnPropagation build_gcn_propagation(const DirectedGraph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> deg(n, 0.0);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j : g.in_neighbors(i))
      if (j != i) deg[i] += 1.0;
  GcnPropagation p;
  for (NodeId i = 0; i < n; ++i) {
    // Self-loop first, then in-neighbors; an input self-loop is replaced by
    // the injected one.
    p.source.push_back(i);
    p.receiver.push_back(i);
    p.weight.push_back(1.0 / (deg[i] + 1.0));
    for (NodeId j : g.in_neighbors(i)) {
      if (j == i) continue;
      p.source.push_back(j);
      p.receiver.push_back(i);
      p.weight.push_back(1.0 / std::sqrt((deg[i] + 1.0) * (deg[j] + 1.0)));
    }
  }
  return p;
}

GraphContext::GraphContext(const DirectedGraph& g)
    : num_nodes(g.num_nodes()),
      from_in(build_message_index(g, Direction::kFromInNeighbors)),
      from_out(build_message_index(g, Direction::kFromOutNeighbors)),
      gcn(build_gcn_propagation(g)) {}

Tensor activate(Tape& tape, const Tensor& x, Activation a) {
  switch (a) {
    case Activation::kRelu: return tape.relu(x);
    case Activation::kSigmoid: return tape.sigmoid(x);
    case Activation::kIdentity: return x;
  }
  return x;
}

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng, std::size_t fan_in,
                      std::size_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = uniform(rng, -bound, bound);
  return m;
}

GcnConv::GcnConv(std::size_t in_dim, std::size_t out_dim)
    : weight_(Tensor::parameter(Matrix(in_dim, out_dim))) {}

Tensor GcnConv::forward(Tape& tape, const GraphContext& ctx, const Tensor& x) const {
  Tensor z = tape.matmul(x, weight_);
  Tensor msgs = tape.scale_rows(tape.gather_rows(z, ctx.gcn.source), ctx.gcn.weight);
  return tape.segment_sum(msgs, ctx.gcn.receiver, ctx.num_nodes);
}

void GcnConv::init(Rng& rng) {
  weight_.mutable_value() = glorot_uniform(weight_.rows(), weight_.cols(), rng);
}

void GcnConv::collect(const std::string& prefix, std::vector<NamedParameter>& out) const {
  out.push_back({prefix + "weight", weight_});
}

GatConv::GatConv(std::size_t in_dim, std::size_t out_dim, std::size_t heads, Direction direction)
    : heads_(heads), direction_(direction) {
  if (heads == 0 || out_dim % heads != 0) {
    throw ConfigError("attention output width " + std::to_string(out_dim) +
                      " is not divisible by " + std::to_string(heads) + " heads");
  }
  weight_ = Tensor::parameter(Matrix(in_dim, out_dim));
  att_src_ = Tensor::parameter(Matrix(heads, out_dim / heads));
  att_dst_ = Tensor::parameter(Matrix(heads, out_dim / heads));
}

Tensor GatConv::scores(Tape& tape, const MessageIndex& idx, const Tensor& z) const {
  if (mode_ == AttentionMode::kUniform) {
    Matrix w(idx.source.size(), heads_);
    for (std::size_t e = 0; e < idx.source.size(); ++e)
      for (std::size_t h = 0; h < heads_; ++h) w(e, h) = idx.inv_degree[e];
    return Tensor::constant(std::move(w));
  }
  Tensor s_src = tape.head_dot(z, att_src_);
  Tensor s_dst = tape.head_dot(z, att_dst_);
  Tensor e = tape.leaky_relu(
      tape.add(tape.gather_rows(s_src, idx.source), tape.gather_rows(s_dst, idx.receiver)), 0.2);
  return tape.segment_softmax(e, idx.receiver, z.rows());
}

Tensor GatConv::forward(Tape& tape, const GraphContext& ctx, const Tensor& x) const {
  const MessageIndex& idx = ctx.messages(direction_);
  Tensor z = tape.matmul(x, weight_);
  Tensor alpha = scores(tape, idx, z);
  Tensor msgs = tape.head_scale(tape.gather_rows(z, idx.source), alpha);
  return tape.segment_sum(msgs, idx.receiver, ctx.num_nodes);
}

Matrix GatConv::attention_weights(const GraphContext& ctx, const Matrix& x) const {
  Tape tape;
  Tensor z = tape.matmul(Tensor::constant(x), Tensor::constant(weight_.value()));
  GatConv frozen = *this;
  frozen.att_src_ = Tensor::constant(att_src_.value());
  frozen.att_dst_ = Tensor::constant(att_dst_.value());
  return frozen.scores(tape, ctx.messages(direction_), z).value();
}

void GatConv::init(Rng& rng) {
  const std::size_t dim = att_src_.cols();
  weight_.mutable_value() = glorot_uniform(weight_.rows(), weight_.cols(), rng);
  att_src_.mutable_value() = glorot_uniform(heads_, dim, rng, dim, 1);
  att_dst_.mutable_value() = glorot_uniform(heads_, dim, rng, dim, 1);
}

void GatConv::collect(const std::string& prefix, std::vector<NamedParameter>& out) const {
  out.push_back({prefix + "weight", weight_});
  out.push_back({prefix + "att_src", att_src_});
  out.push_back({prefix + "att_dst", att_dst_});
}

DirGatConv::DirGatConv(std::size_t in_dim, std::size_t out_dim, std::size_t heads)
    : conv_in_(in_dim, out_dim, heads, Direction::kFromInNeighbors),
      conv_out_(in_dim, out_dim, heads, Direction::kFromOutNeighbors),
      comb_in_(Tensor::parameter(Matrix(out_dim, out_dim))),
      comb_out_(Tensor::parameter(Matrix(out_dim, out_dim))) {}

Tensor DirGatConv::forward(Tape& tape, const GraphContext& ctx, const Tensor& x) const {
  Tensor m_in = conv_in_.forward(tape, ctx, x);
  Tensor m_out = conv_out_.forward(tape, ctx, x);
  return tape.add(tape.matmul(m_in, comb_in_), tape.matmul(m_out, comb_out_));
}

void DirGatConv::init(Rng& rng) {
  conv_in_.init(rng);
  conv_out_.init(rng);
  comb_in_.mutable_value() = glorot_uniform(comb_in_.rows(), comb_in_.cols(), rng);
  comb_out_.mutable_value() = glorot_uniform(comb_out_.rows(), comb_out_.cols(), rng);
}

void DirGatConv::collect(const std::string& prefix, std::vector<NamedParameter>& out) const {
  conv_in_.collect(prefix + "in.", out);
  conv_out_.collect(prefix + "out.", out);
  out.push_back({prefix + "comb_in", comb_in_});
  out.push_back({prefix + "comb_out", comb_out_});
}

void DirGatConv::set_attention(AttentionMode mode) {
  conv_in_.set_attention(mode);
  conv_out_.set_attention(mode);
}

}  // namespace dirpoly
