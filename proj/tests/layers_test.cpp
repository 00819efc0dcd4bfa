#include <gtest/gtest.h>

#include <cmath>

#include "dirpoly/error.hpp"
#include "dirpoly/model.hpp"
#include "reference_model.hpp"
#include "test_util.hpp"

namespace dirpoly {
namespace {

using testing::random_graph;
using testing::random_matrix;

Matrix gcn_forward(const GcnConv& conv, const DirectedGraph& g, const Matrix& x) {
  GraphContext ctx(g);
  Tape tape;
  return conv.forward(tape, ctx, Tensor::constant(x)).value();
}

Matrix conv_forward(const Conv& conv, const DirectedGraph& g, const Matrix& x) {
  GraphContext ctx(g);
  Tape tape;
  return conv.forward(tape, ctx, Tensor::constant(x)).value();
}

Matrix model_forward(const Model& m, const DirectedGraph& g, const Matrix& x) {
  GraphContext ctx(g);
  Tape tape;
  Rng rng(0);
  return m.forward(tape, ctx, Tensor::constant(x), false, rng).value();
}

ModelConfig small_config(ModelKind kind, std::size_t layers = 2, std::size_t heads = 2) {
  ModelConfig c;
  c.kind = kind;
  c.input_dim = 5;
  c.output_dim = 3;
  c.hidden = 4;
  c.layers = layers;
  c.heads = heads;
  c.dropout = 0.0;
  return c;
}

TEST(GcnConv, MatchesDenseNormalizedAdjacency) {
  Rng rng(11);
  auto edges = testing::random_edges(15, 40, rng, true);
  DirectedGraph g(15, edges);
  GcnConv conv(6, 4);
  conv.init(rng);
  Matrix x = random_matrix(15, 6, rng);
  Matrix expect = reference::gcn(g, x, conv.weight().value());
  EXPECT_LT(max_abs_diff(gcn_forward(conv, g, x), expect), 1e-10);
}

TEST(GcnConv, SingleNodeIsLinearMap) {
  DirectedGraph g(1, {});
  GcnConv conv(3, 3);
  Rng rng(1);
  conv.init(rng);
  Matrix x = Matrix::from_rows({{1.0, -2.0, 0.5}});
  EXPECT_LT(max_abs_diff(gcn_forward(conv, g, x), testing::dense_matmul(x, conv.weight().value())),
            1e-12);
}

TEST(GcnConv, Linear) {
  Rng rng(2);
  DirectedGraph g = random_graph(10, 25, rng);
  GcnConv conv(4, 4);
  conv.init(rng);
  Matrix x = random_matrix(10, 4, rng);
  Matrix x2 = x;
  for (double& v : x2.values()) v *= 2.0;
  Matrix a = gcn_forward(conv, g, x), b = gcn_forward(conv, g, x2);
  for (double& v : a.values()) v *= 2.0;
  EXPECT_LT(max_abs_diff(a, b), 1e-12);
}

TEST(GatConv, MatchesDenseAttention) {
  Rng rng(3);
  DirectedGraph g = random_graph(12, 36, rng);
  for (Direction d : {Direction::kFromInNeighbors, Direction::kFromOutNeighbors}) {
    GatConv conv(5, 6, 2, d);
    conv.init(rng);
    Matrix x = random_matrix(12, 5, rng);
    reference::GatParams p{conv.weight().value(), conv.att_src().value(), conv.att_dst().value()};
    EXPECT_LT(max_abs_diff(conv_forward(conv, g, x), reference::gat(g, d, x, p)), 1e-10);
  }
}

TEST(GatConv, SingleNeighborCopiesItsProjection) {
  std::vector<Edge> e{{0, 1}};
  DirectedGraph g(2, e);
  Rng rng(4);
  GatConv conv(3, 4, 2, Direction::kFromInNeighbors);
  conv.init(rng);
  Matrix x = random_matrix(2, 3, rng);
  Matrix z = testing::dense_matmul(x, conv.weight().value());
  Matrix out = conv_forward(conv, g, x);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(out(1, c), z(0, c), 1e-12);
    EXPECT_EQ(out(0, c), 0.0);
  }
}

TEST(GatConv, IdenticalFeaturesGiveUniformAttention) {
  Rng rng(5);
  DirectedGraph g = random_graph(10, 30, rng);
  GatConv conv(3, 4, 2, Direction::kFromInNeighbors);
  conv.init(rng);
  Matrix x(10, 3);
  for (std::size_t i = 0; i < 10; ++i) x(i, 0) = 1.0, x(i, 1) = -0.5, x(i, 2) = 2.0;
  GraphContext ctx(g);
  Matrix alpha = conv.attention_weights(ctx, x);
  const auto& idx = ctx.messages(Direction::kFromInNeighbors);
  for (std::size_t e = 0; e < idx.source.size(); ++e)
    for (std::size_t h = 0; h < 2; ++h) EXPECT_NEAR(alpha(e, h), idx.inv_degree[e], 1e-12);
}

TEST(GatConv, AttentionRowsSumToOne) {
  Rng rng(6);
  DirectedGraph g = random_graph(20, 70, rng);
  GatConv conv(4, 6, 3, Direction::kFromOutNeighbors);
  conv.init(rng);
  GraphContext ctx(g);
  Matrix alpha = conv.attention_weights(ctx, random_matrix(20, 4, rng));
  const auto& idx = ctx.messages(Direction::kFromOutNeighbors);
  std::vector<std::vector<double>> sums(20, std::vector<double>(3, 0.0));
  for (std::size_t e = 0; e < idx.source.size(); ++e)
    for (std::size_t h = 0; h < 3; ++h) sums[idx.receiver[e]][h] += alpha(e, h);
  for (NodeId v = 0; v < 20; ++v)
    for (std::size_t h = 0; h < 3; ++h)
      EXPECT_NEAR(sums[v][h], g.out_degree(v) > 0 ? 1.0 : 0.0, 1e-12);
}

TEST(GatConv, RejectsHeadsNotDividingWidth) {
  EXPECT_THROW(GatConv(4, 6, 4, Direction::kFromInNeighbors), ConfigError);
}

TEST(DirGatConv, SourceNodeReceivesOnlyOutMessage) {
  std::vector<Edge> e{{0, 1}};
  DirectedGraph g(2, e);
  Rng rng(7);
  DirGatConv conv(3, 4, 1);
  conv.init(rng);
  Matrix x = random_matrix(2, 3, rng);
  Matrix out = conv_forward(conv, g, x);
  // node 0 has out-neighbor 1 only; node 1 has in-neighbor 0 only.
  Matrix z_out = testing::dense_matmul(x, conv.conv_out().weight().value());
  Matrix z_in = testing::dense_matmul(x, conv.conv_in().weight().value());
  Matrix m0(1, 4), m1(1, 4);
  for (std::size_t c = 0; c < 4; ++c) m0(0, c) = z_out(1, c), m1(0, c) = z_in(0, c);
  Matrix e0 = testing::dense_matmul(m0, conv.comb_out().value());
  Matrix e1 = testing::dense_matmul(m1, conv.comb_in().value());
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(out(0, c), e0(0, c), 1e-12);
    EXPECT_NEAR(out(1, c), e1(0, c), 1e-12);
  }
}

TEST(DirGatConv, SymmetricGraphWithTiedParameters) {
  Rng rng(8);
  DirectedGraph g = symmetrize(random_graph(12, 30, rng));
  DirGatConv conv(4, 4, 2);
  conv.init(rng);
  conv.conv_out().weight().mutable_value() = conv.conv_in().weight().value();
  conv.conv_out().att_src().mutable_value() = conv.conv_in().att_src().value();
  conv.conv_out().att_dst().mutable_value() = conv.conv_in().att_dst().value();
  Matrix x = random_matrix(12, 4, rng);
  Matrix m = conv_forward(conv.conv_in(), g, x);
  Matrix comb = conv.comb_in().value();
  for (std::size_t i = 0; i < comb.size(); ++i) comb.values()[i] += conv.comb_out().value().values()[i];
  EXPECT_LT(max_abs_diff(conv_forward(conv, g, x), testing::dense_matmul(m, comb)), 1e-10);
}

TEST(DirGatConv, ComposesTwoDirectionalOracles) {
  Rng rng(9);
  DirectedGraph g = random_graph(14, 40, rng);
  DirGatConv conv(5, 6, 3);
  conv.init(rng);
  Matrix x = random_matrix(14, 5, rng);
  auto params = [](GatConv& c) {
    return reference::GatParams{c.weight().value(), c.att_src().value(), c.att_dst().value()};
  };
  Matrix expect = reference::add(
      testing::dense_matmul(reference::gat(g, Direction::kFromInNeighbors, x, params(conv.conv_in())),
                            conv.comb_in().value()),
      testing::dense_matmul(reference::gat(g, Direction::kFromOutNeighbors, x, params(conv.conv_out())),
                            conv.comb_out().value()));
  EXPECT_LT(max_abs_diff(conv_forward(conv, g, x), expect), 1e-10);
}

TEST(PolyNetwork, MatchesScalarReimplementation) {
  Rng rng(10);
  DirectedGraph g = random_graph(10, 28, rng);
  Matrix x = random_matrix(10, 5, rng);
  for (ModelKind kind : {ModelKind::kPoly, ModelKind::kDirPoly}) {
    for (Activation a : {Activation::kRelu, Activation::kSigmoid, Activation::kIdentity}) {
      ModelConfig cfg = small_config(kind);
      cfg.sigma = a;
      auto model = make_model(cfg);
      model->init_parameters(rng);
      for (auto& p : model->parameters())
        if (p.name.ends_with("beta_raw")) p.tensor.mutable_value()(0, 0) = uniform(rng, -2.0, 2.0);
      EXPECT_LT(max_abs_diff(model_forward(*model, g, x), reference::poly(*model, g, x)), 1e-10)
          << model_kind_name(kind) << " " << activation_name(a);
    }
  }
}

TEST(PolyNetwork, SaturatedBetaDropsGate) {
  Rng rng(12);
  DirectedGraph g = random_graph(10, 25, rng);
  Matrix x = random_matrix(10, 5, rng);
  ModelConfig cfg = small_config(ModelKind::kPoly, 1);
  auto model = make_model(cfg);
  model->init_parameters(rng);
  auto& net = static_cast<PolyNetwork&>(*model);
  net.blocks()[0].beta_raw.mutable_value()(0, 0) = 20.0;
  // beta -> 1 leaves logits = (Conv(x0) + x0 W_l) W_out.
  Matrix x0 = testing::dense_matmul(x, net.w_in().value());
  Matrix conv = conv_forward(*net.blocks()[0].conv, g, x0);
  Matrix lin = reference::add(conv, testing::dense_matmul(x0, net.blocks()[0].w_l.value()));
  EXPECT_LT(max_abs_diff(model_forward(*model, g, x), testing::dense_matmul(lin, net.w_out().value())),
            1e-6);
}

TEST(PolyNetwork, ZeroInputGivesZeroLogits) {
  Rng rng(13);
  DirectedGraph g = random_graph(8, 20, rng);
  for (ModelKind kind : {ModelKind::kPoly, ModelKind::kDirPoly}) {
    auto model = make_model(small_config(kind));
    model->init_parameters(rng);
    Matrix out = model_forward(*model, g, Matrix(8, 5));
    for (double v : out.values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Models, PermutationEquivariant) {
  Rng rng(14);
  DirectedGraph g = random_graph(16, 45, rng);
  Matrix x = random_matrix(16, 5, rng);
  auto perm = testing::random_permutation(16, rng);
  DirectedGraph pg = permute(g, perm);
  Matrix px(16, 5);
  for (std::size_t v = 0; v < 16; ++v)
    for (std::size_t c = 0; c < 5; ++c) px(perm[v], c) = x(v, c);
  for (ModelKind kind : {ModelKind::kGcn, ModelKind::kGat, ModelKind::kPoly, ModelKind::kDirPoly}) {
    auto model = make_model(small_config(kind));
    model->init_parameters(rng);
    Matrix a = model_forward(*model, g, x), b = model_forward(*model, pg, px);
    double worst = 0.0;
    for (std::size_t v = 0; v < 16; ++v)
      for (std::size_t c = 0; c < 3; ++c) worst = std::max(worst, std::abs(a(v, c) - b(perm[v], c)));
    EXPECT_LT(worst, 1e-10) << model_kind_name(kind);
  }
}

TEST(Models, GradientsMatchFiniteDifferences) {
  Rng rng(15);
  DirectedGraph g = random_graph(10, 30, rng);
  Matrix x = random_matrix(10, 5, rng, -1.0, 1.0);
  std::vector<int> labels = testing::random_labels(10, 3, rng);
  std::vector<NodeId> rows{0, 2, 3, 5, 7, 8};
  GraphContext ctx(g);
  for (ModelKind kind : {ModelKind::kGcn, ModelKind::kGat, ModelKind::kPoly, ModelKind::kDirPoly}) {
    ModelConfig cfg = small_config(kind);
    cfg.sigma = Activation::kSigmoid;
    auto model = make_model(cfg);
    model->init_parameters(rng);
    for (auto& p : model->parameters())
      if (p.name.ends_with("beta_raw")) p.tensor.mutable_value()(0, 0) = 0.3;
    auto loss = [&](bool grad) {
      Tape tape;
      Rng r(0);
      Tensor out = model->forward(tape, ctx, Tensor::constant(x), false, r);
      Tensor l = tape.cross_entropy_logits(out, labels, rows);
      if (grad) tape.backward(l);
      return l.item();
    };
    for (auto& p : model->parameters()) p.tensor.zero_grad();
    loss(true);
    for (auto& p : model->parameters()) {
      Matrix analytic = p.tensor.grad();
      double err = testing::max_relative_grad_error([&] { return loss(false); },
                                                    p.tensor.mutable_value(), analytic, 1e-6, 1e-7);
      EXPECT_LT(err, 1e-4) << model_kind_name(kind) << " " << p.name;
    }
  }
}

TEST(Init, SeedDeterministic) {
  for (ModelKind kind : {ModelKind::kGcn, ModelKind::kGat, ModelKind::kPoly, ModelKind::kDirPoly}) {
    auto a = make_model(small_config(kind)), b = make_model(small_config(kind));
    Rng ra(99), rb(99);
    a->init_parameters(ra);
    b->init_parameters(rb);
    EXPECT_EQ(a->snapshot(), b->snapshot());
  }
}

TEST(Init, BetaStartsAtZeroAndWeightsWithinGlorotBound) {
  ModelConfig cfg = small_config(ModelKind::kDirPoly, 3, 2);
  cfg.hidden = 8;
  auto model = make_model(cfg);
  Rng rng(16);
  model->init_parameters(rng);
  for (const auto& p : model->parameters()) {
    const Matrix& v = p.tensor.value();
    if (p.name.ends_with("beta_raw")) {
      EXPECT_EQ(v(0, 0), 0.0);
      continue;
    }
    const bool att = p.name.ends_with("att_src") || p.name.ends_with("att_dst");
    const double fan = att ? v.cols() + 1.0 : static_cast<double>(v.rows() + v.cols());
    const double bound = std::sqrt(6.0 / fan);
    for (double x : v.values()) EXPECT_LE(std::abs(x), bound) << p.name;
  }
}

TEST(Init, GlorotVariance) {
  Rng rng(17);
  Matrix w = glorot_uniform(256, 256, rng);
  double mean = 0.0, sq = 0.0;
  for (double v : w.values()) mean += v, sq += v * v;
  mean /= w.size();
  const double var = sq / w.size() - mean * mean;
  const double expect = 2.0 / 512.0;
  EXPECT_NEAR(var, expect, 0.2 * expect);
}

}  // namespace
}  // namespace dirpoly
