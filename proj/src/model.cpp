#include "dirpoly/model.hpp"

#include <algorithm>
#include <cmath>

#include "dirpoly/error.hpp"

namespace dirpoly {

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGcn: return "gcn";
    case ModelKind::kGat: return "gat";
    case ModelKind::kPoly: return "poly";
    case ModelKind::kDirPoly: return "dir-poly";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "gcn") return ModelKind::kGcn;
  if (name == "gat") return ModelKind::kGat;
  if (name == "poly") return ModelKind::kPoly;
  if (name == "dir-poly") return ModelKind::kDirPoly;
  throw ConfigError("unknown model '" + std::string(name) + "' (expected gcn, gat, poly, dir-poly)");
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view direction_name(Direction d) {
  return d == Direction::kFromInNeighbors ? "in" : "out";
}

Direction parse_direction(std::string_view name) {
  if (name == "in") return Direction::kFromInNeighbors;
  if (name == "out") return Direction::kFromOutNeighbors;
  throw ConfigError("unknown direction '" + std::string(name) + "' (expected in, out)");
}

std::vector<Matrix> Model::snapshot() const {
  std::vector<Matrix> values;
  for (const auto& p : parameters()) values.push_back(p.tensor.value());
  return values;
}

void Model::restore(const std::vector<Matrix>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw ShapeError("parameter count mismatch on restore");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!values[i].same_shape(params[i].tensor.value())) {
      throw ShapeError("parameter " + params[i].name + " expects shape " +
                       params[i].tensor.value().shape_string() + ", got " +
                       values[i].shape_string());
    }
    params[i].tensor.mutable_value() = values[i];
  }
}

std::size_t Model::num_parameters() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.tensor.value().size();
  return n;
}

namespace {

void check_input(const ModelConfig& cfg, const Tensor& x, const GraphContext& ctx) {
  if (x.cols() != cfg.input_dim || x.rows() != ctx.num_nodes) {
    throw ShapeError("model expects input (" + std::to_string(ctx.num_nodes) + "," +
                     std::to_string(cfg.input_dim) + "), got " + x.value().shape_string());
  }
}

void check_config(const ModelConfig& cfg) {
  if (cfg.input_dim == 0 || cfg.output_dim == 0 || cfg.hidden == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (cfg.layers == 0) throw ConfigError("model needs at least one layer");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw ConfigError("dropout must be in [0,1)");
}

Tensor param(std::size_t r, std::size_t c) { return Tensor::parameter(Matrix(r, c)); }

void glorot(Tensor& t, Rng& rng) { t.mutable_value() = glorot_uniform(t.rows(), t.cols(), rng); }

std::string layer_prefix(std::size_t i) { return "layer" + std::to_string(i) + "."; }

}  // namespace

GcnNetwork::GcnNetwork(ModelConfig config) : Model(config) {
  check_config(config_);
  w_in_ = param(config_.input_dim, config_.hidden);
  for (std::size_t i = 0; i < config_.layers; ++i) convs_.emplace_back(config_.hidden, config_.hidden);
  w_out_ = param(config_.hidden, config_.output_dim);
}

Tensor GcnNetwork::forward(Tape& tape, const GraphContext& ctx, const Tensor& x, bool train,
                           Rng& rng) const {
  check_input(config_, x, ctx);
  Tensor h = tape.matmul(x, w_in_);
  for (const auto& conv : convs_) {
    h = activate(tape, conv.forward(tape, ctx, h), config_.sigma);
    h = tape.dropout(h, config_.dropout, train, rng);
  }
  return tape.matmul(h, w_out_);
}

std::vector<NamedParameter> GcnNetwork::parameters() const {
  std::vector<NamedParameter> out{{"w_in", w_in_}};
  for (std::size_t i = 0; i < convs_.size(); ++i) convs_[i].collect(layer_prefix(i) + "conv.", out);
  out.push_back({"w_out", w_out_});
  return out;
}

void GcnNetwork::init_parameters(Rng& rng) {
  glorot(w_in_, rng);
  for (auto& conv : convs_) conv.init(rng);
  glorot(w_out_, rng);
}

GatNetwork::GatNetwork(ModelConfig config) : Model(config) {
  check_config(config_);
  w_in_ = param(config_.input_dim, config_.hidden);
  for (std::size_t i = 0; i < config_.layers; ++i) {
    convs_.push_back(
        std::make_unique<GatConv>(config_.hidden, config_.hidden, config_.heads, config_.direction));
    w_self_.push_back(param(config_.hidden, config_.hidden));
  }
  w_out_ = param(config_.hidden, config_.output_dim);
}

Tensor GatNetwork::forward(Tape& tape, const GraphContext& ctx, const Tensor& x, bool train,
                           Rng& rng) const {
  check_input(config_, x, ctx);
  Tensor h = tape.matmul(x, w_in_);
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    Tensor pre = tape.add(convs_[i]->forward(tape, ctx, h), tape.matmul(h, w_self_[i]));
    h = tape.dropout(activate(tape, pre, config_.sigma), config_.dropout, train, rng);
  }
  return tape.matmul(h, w_out_);
}

std::vector<NamedParameter> GatNetwork::parameters() const {
  std::vector<NamedParameter> out{{"w_in", w_in_}};
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i]->collect(layer_prefix(i) + "conv.", out);
    out.push_back({layer_prefix(i) + "w_self", w_self_[i]});
  }
  out.push_back({"w_out", w_out_});
  return out;
}

void GatNetwork::init_parameters(Rng& rng) {
  glorot(w_in_, rng);
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i]->init(rng);
    glorot(w_self_[i], rng);
  }
  glorot(w_out_, rng);
}

void GatNetwork::set_attention(AttentionMode mode) {
  for (auto& c : convs_) c->set_attention(mode);
}

Tensor PolyBlock::forward(Tape& tape, const GraphContext& ctx, const Tensor& x,
                          Activation sigma) const {
  Tensor h = activate(tape, tape.matmul(x, w_h), sigma);
  Tensor xp = tape.add(conv->forward(tape, ctx, x), tape.matmul(x, w_l));
  Tensor beta = tape.sigmoid(beta_raw);
  Tensor one_minus_beta = tape.sigmoid(tape.scale(beta_raw, -1.0));
  return tape.add(tape.scale_by(tape.mul(h, xp), one_minus_beta), tape.scale_by(xp, beta));
}

double PolyBlock::beta() const {
  const double r = beta_raw.item();
  return r >= 0 ? 1.0 / (1.0 + std::exp(-r)) : std::exp(r) / (1.0 + std::exp(r));
}

PolyNetwork::PolyNetwork(ModelConfig config) : Model(config) {
  check_config(config_);
  if (config_.kind != ModelKind::kPoly && config_.kind != ModelKind::kDirPoly) {
    throw ConfigError("PolyNetwork requires model poly or dir-poly");
  }
  const std::size_t hid = config_.hidden;
  w_in_ = param(config_.input_dim, hid);
  for (std::size_t i = 0; i < config_.layers; ++i) {
    PolyBlock b;
    b.w_h = param(hid, hid);
    b.w_l = param(hid, hid);
    b.beta_raw = param(1, 1);
    if (config_.kind == ModelKind::kDirPoly) {
      b.conv = std::make_unique<DirGatConv>(hid, hid, config_.heads);
    } else {
      b.conv = std::make_unique<GatConv>(hid, hid, config_.heads, config_.direction);
    }
    blocks_.push_back(std::move(b));
  }
  w_out_ = param(hid, config_.output_dim);
}

Tensor PolyNetwork::forward(Tape& tape, const GraphContext& ctx, const Tensor& x, bool train,
                            Rng& rng) const {
  check_input(config_, x, ctx);
  Tensor h = tape.matmul(x, w_in_);
  Tensor local;
  for (const auto& block : blocks_) {
    h = tape.dropout(block.forward(tape, ctx, h, config_.sigma), config_.dropout, train, rng);
    local = local.defined() ? tape.add(local, h) : h;
  }
  return tape.matmul(local, w_out_);
}

std::vector<NamedParameter> PolyNetwork::parameters() const {
  std::vector<NamedParameter> out{{"w_in", w_in_}};
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = layer_prefix(i);
    out.push_back({p + "w_h", blocks_[i].w_h});
    out.push_back({p + "w_l", blocks_[i].w_l});
    out.push_back({p + "beta_raw", blocks_[i].beta_raw});
    blocks_[i].conv->collect(p + "conv.", out);
  }
  out.push_back({"w_out", w_out_});
  return out;
}

void PolyNetwork::init_parameters(Rng& rng) {
  glorot(w_in_, rng);
  for (auto& b : blocks_) {
    glorot(b.w_h, rng);
    glorot(b.w_l, rng);
    b.beta_raw.mutable_value() = Matrix(1, 1, 0.0);
    b.conv->init(rng);
  }
  glorot(w_out_, rng);
}

void PolyNetwork::set_attention(AttentionMode mode) {
  for (auto& b : blocks_) b.conv->set_attention(mode);
}

bool GatNetwork::attention_frozen() const {
  return std::all_of(convs_.begin(), convs_.end(),
                     [](const auto& c) { return c->attention() == AttentionMode::kUniform; });
}

bool PolyNetwork::attention_frozen() const {
  return std::all_of(blocks_.begin(), blocks_.end(),
                     [](const auto& b) { return b.conv->attention() == AttentionMode::kUniform; });
}

std::unique_ptr<Model> make_model(const ModelConfig& config) {
  switch (config.kind) {
    case ModelKind::kGcn: return std::make_unique<GcnNetwork>(config);
    case ModelKind::kGat: return std::make_unique<GatNetwork>(config);
    case ModelKind::kPoly:
    case ModelKind::kDirPoly: return std::make_unique<PolyNetwork>(config);
  }
  throw ConfigError("unknown model kind");
}

}  // namespace dirpoly
