#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dirpoly/layers.hpp"

namespace dirpoly {

enum class ModelKind { kGcn, kGat, kPoly, kDirPoly };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);
std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);
std::string_view direction_name(Direction d);
Direction parse_direction(std::string_view name);

struct ModelConfig {
  ModelKind kind = ModelKind::kPoly;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;  // classes, or 1 for a binary task
  std::size_t hidden = 64;
  std::size_t layers = 3;
  std::size_t heads = 1;
  Activation sigma = Activation::kRelu;
  double dropout = 0.2;
  // Neighborhood attended by single-direction convolutions (gat, poly).
  Direction direction = Direction::kFromInNeighbors;

  bool operator==(const ModelConfig&) const = default;
};

class Model {
 public:
  explicit Model(ModelConfig config) : config_(config) {}
  virtual ~Model() = default;

  virtual Tensor forward(Tape& tape, const GraphContext& ctx, const Tensor& x, bool train,
                         Rng& rng) const = 0;
  // Parameters in declared enumeration order (stable across runs).
  virtual std::vector<NamedParameter> parameters() const = 0;
  // Sets every parameter; beta_raw values start at 0.
  virtual void init_parameters(Rng& rng) = 0;
  virtual void set_attention(AttentionMode) {}
  // True when no learned attention is active (always true for GCN).
  virtual bool attention_frozen() const { return true; }

  const ModelConfig& config() const { return config_; }
  void set_sigma(Activation a) { config_.sigma = a; }
  void set_dropout(double rate) { config_.dropout = rate; }

  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);
  std::size_t num_parameters() const;

 protected:
  ModelConfig config_;
};

// x0 = x W_in; x_i = sigma(GcnConv_i(x_{i-1})); logits = x_L W_out.
class GcnNetwork : public Model {
 public:
  explicit GcnNetwork(ModelConfig config);
  Tensor forward(Tape& tape, const GraphContext& ctx, const Tensor& x, bool train,
                 Rng& rng) const override;
  std::vector<NamedParameter> parameters() const override;
  void init_parameters(Rng& rng) override;

 private:
  Tensor w_in_;
  std::vector<GcnConv> convs_;
  Tensor w_out_;
};

// x0 = x W_in; x_i = sigma(GatConv_i(x_{i-1}) + x_{i-1} W_self,i); logits = x_L W_out.
class GatNetwork : public Model {
 public:
  explicit GatNetwork(ModelConfig config);
  Tensor forward(Tape& tape, const GraphContext& ctx, const Tensor& x, bool train,
                 Rng& rng) const override;
  std::vector<NamedParameter> parameters() const override;
  void init_parameters(Rng& rng) override;
  void set_attention(AttentionMode mode) override;
  bool attention_frozen() const override;

 private:
  Tensor w_in_;
  std::vector<std::unique_ptr<GatConv>> convs_;
  std::vector<Tensor> w_self_;
  Tensor w_out_;
};

// One gated layer:
//   h  = sigma(x W_h)
//   x' = Conv(x) + x W_l
//   y  = (1 - beta) (h ⊙ x') + beta x',  beta = logistic(beta_raw)
struct PolyBlock {
  Tensor w_h;
  Tensor w_l;
  Tensor beta_raw;  // 1 x 1
  std::unique_ptr<Conv> conv;

  Tensor forward(Tape& tape, const GraphContext& ctx, const Tensor& x, Activation sigma) const;
  double beta() const;
};

// Poly (single-direction GatConv) or Dir-Poly (DirGatConv) stack:
// x0 = x W_in, x_i = dropout(PolyBlock_i(x_{i-1})), logits = (sum_i x_i) W_out.
class PolyNetwork : public Model {
 public:
  explicit PolyNetwork(ModelConfig config);
  Tensor forward(Tape& tape, const GraphContext& ctx, const Tensor& x, bool train,
                 Rng& rng) const override;
  std::vector<NamedParameter> parameters() const override;
  void init_parameters(Rng& rng) override;
  void set_attention(AttentionMode mode) override;
  bool attention_frozen() const override;

  std::vector<PolyBlock>& blocks() { return blocks_; }
  const std::vector<PolyBlock>& blocks() const { return blocks_; }
  Tensor& w_in() { return w_in_; }
  Tensor& w_out() { return w_out_; }

 private:
  Tensor w_in_;
  std::vector<PolyBlock> blocks_;
  Tensor w_out_;
};

std::unique_ptr<Model> make_model(const ModelConfig& config);

}  // namespace dirpoly
