// Copyright 2026 The rankkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "gradcheck_suite.hpp"
#include "rankkit/error.hpp"
#include "rankkit/layers.hpp"
#include "rankkit/rng.hpp"

namespace rankkit {
namespace {

using testing::Gen;

constexpr int kSeeds = 24;
constexpr double kTol = 1e-4;

Tensor vec(const std::vector<double>& v) { return Tensor::vector(v); }

// ---------------------------------------------------------------------------
// Low-rank cross

TEST(LowRankCross, ZeroWeightsPassResidualThrough) {
  LowRankCrossLayer layer("c", 4, 2);
  const Tensor xl = vec({1, -2, 3, 0.5});
  EXPECT_EQ(cross_forward(layer, vec({1, 1, 1, 1}), xl), xl);
}

TEST(LowRankCross, ZeroX0PassesResidualThrough) {
  Rng rng(1);
  LowRankCrossLayer layer("c", 4, 2);
  layer.init(rng);
  const Tensor xl = vec({1, -2, 3, 0.5});
  EXPECT_EQ(cross_forward(layer, vec({0, 0, 0, 0}), xl), xl);
}

TEST(LowRankCross, MatchesDenseMatrixOracle) {
  LowRankCrossLayer layer("c", 3, 2);
  layer.U.value = Tensor::matrix({{1, 2}, {0, -1}, {0.5, 3}});
  layer.V.value = Tensor::matrix({{2, 0}, {1, 1}, {-1, 0.5}});
  layer.bias.value = vec({0.1, -0.2, 0.3});
  const Tensor x = vec({1, 1, 1});
  // W = U V^T, out = x0 * (W x1 + b) + x1
  const Tensor w = matmul(layer.U.value, Tensor({2, 3}, {2, 1, -1, 0, 1, 0.5}));
  const Tensor out = cross_forward(layer, x, x);
  for (std::size_t i = 0; i < 3; ++i) {
    double wx = 0.0;
    for (std::size_t j = 0; j < 3; ++j) wx += w.at(i, j) * x[j];
    EXPECT_NEAR(out[i], x[i] * (wx + layer.bias.value[i]) + x[i], 1e-14);
  }
}

TEST(LowRankCross, DimensionMismatch) {
  LowRankCrossLayer layer("c", 3, 2);
  EXPECT_THROW(cross_forward(layer, vec({1, 1}), vec({1, 1, 1})), DimensionError);
  EXPECT_THROW(LowRankCrossLayer("c", 2, 3), ParameterError);
}

TEST(LowRankCross, ParameterCount) {
  LowRankCrossLayer layer("c", 8, 3);
  ParameterList ps;
  layer.collect(ps);
  EXPECT_EQ(layer.parameter_count(), 8u * 3 * 2 + 8);
  EXPECT_EQ(count_elements(ps), layer.parameter_count());
}

TEST(LowRankCross, GradientCheck) {
  for (int s = 0; s < kSeeds; ++s) EXPECT_LE(testing::gradcheck_lowrank_cross(s), kTol) << s;
}

// ---------------------------------------------------------------------------
// Attention cross

// Computes q, k, v, S and the output with explicit loops.
Tensor attention_oracle(const AttentionCrossLayer& l, const Tensor& x0, const Tensor& xl) {
  const std::size_t d = l.dim(), r = l.rank();
  std::vector<double> q(r, 0.0), k(r, 0.0), v(r, 0.0);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < d; ++i) {
      q[j] += l.Vq.value.at(i, j) * xl[i];
      k[j] += l.Vk.value.at(i, j) * xl[i];
      v[j] += l.Vv.value.at(i, j) * xl[i];
    }
  const double denom = l.temperature() * std::sqrt(static_cast<double>(r));
  std::vector<double> mixed(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -1e300;
    for (std::size_t j = 0; j < r; ++j) mx = std::max(mx, q[i] * k[j] / denom);
    double z = 0.0;
    std::vector<double> e(r);
    for (std::size_t j = 0; j < r; ++j) z += e[j] = std::exp(q[i] * k[j] / denom - mx);
    for (std::size_t j = 0; j < r; ++j) mixed[i] += e[j] / z * v[j];
  }
  Tensor out({d});
  for (std::size_t i = 0; i < d; ++i) {
    double h = l.bias.value[i];
    for (std::size_t j = 0; j < r; ++j) h += l.Ua.value.at(i, j) * mixed[j];
    out[i] = x0[i] * h + xl[i];
  }
  return out;
}

TEST(AttentionCross, MatchesStepByStepOracle) {
  for (int s = 0; s < 10; ++s) {
    Gen g(s);
    AttentionCrossLayer layer("a", 4, 2, g.real(0.5, 2.0));
    layer.init(g.rng());
    g.randomize(layer.Vq.value, -2, 2);
    g.randomize(layer.bias.value);
    const Tensor x0 = g.tensor(4), xl = g.tensor(4);
    const Tensor got = attention_cross_forward(layer, x0, xl);
    const Tensor ref = attention_oracle(layer, x0, xl);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(got[i], ref[i], 1e-13);
  }
}

TEST(AttentionCross, ZeroX0PassesThrough) {
  Rng rng(2);
  AttentionCrossLayer layer("a", 4, 2);
  layer.init(rng);
  const Tensor xl = vec({1, 2, 3, 4});
  EXPECT_EQ(attention_cross_forward(layer, Tensor::zeros(4), xl), xl);
}

TEST(AttentionCross, IdentityScoresDegenerateToPlainCrossBitForBit) {
  for (int s = 0; s < 20; ++s) {
    Gen g(s);
    const std::size_t d = g.size(2, 8), r = g.size(1, d);
    AttentionCrossLayer attn("a", d, r);
    attn.init(g.rng());
    g.randomize(attn.bias.value);
    attn.force_identity_scores = true;
    LowRankCrossLayer plain("c", d, r);
    plain.U.value = attn.Ua.value;
    plain.V.value = attn.Vv.value;
    plain.bias.value = attn.bias.value;
    const Tensor x0 = g.tensor(d), xl = g.tensor(d);
    EXPECT_EQ(attention_cross_forward(attn, x0, xl), cross_forward(plain, x0, xl));
  }
}

// With logits spread over an interval of width D, every softmax entry lies
// within (exp(D) - 1) / r of 1 / r.
TEST(AttentionCross, HugeTemperatureApproachesUniformScores) {
  for (int s = 0; s < 20; ++s) {
    Gen g(s);
    const std::size_t d = g.size(2, 8), r = g.size(1, d);
    AttentionCrossLayer layer("a", d, r, 1e6);
    layer.init(g.rng());
    AttentionCrossLayer::Cache cache;
    Vec out(d);
    const Vec x = g.vec(d);
    layer.delta(x, x, out, cache);
    double lo = 1e300, hi = -1e300;
    for (double qi : cache.q)
      for (double kj : cache.k) {
        lo = std::min(lo, qi * kj);
        hi = std::max(hi, qi * kj);
      }
    const double spread = (hi - lo) / (1e6 * std::sqrt(static_cast<double>(r)));
    const double bound = std::expm1(spread) / static_cast<double>(r) + 1e-15;
    for (double v : cache.scores.values()) EXPECT_LE(std::abs(v - 1.0 / r), bound);
  }
}

TEST(AttentionCross, UniformWithinOneInABillionAtMillionTemperature) {
  // Query-key products of order 1e-3, as for small activations.
  Gen g(4);
  AttentionCrossLayer layer("a", 6, 3, 1e6);
  layer.init(g.rng());
  AttentionCrossLayer::Cache cache;
  Vec out(6);
  const Vec x = g.vec(6, -0.05, 0.05);
  layer.delta(x, x, out, cache);
  for (double v : cache.scores.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-9);
}

TEST(AttentionCross, NonPositiveTemperatureRejected) {
  EXPECT_THROW(AttentionCrossLayer("a", 4, 2, 0.0), ParameterError);
  AttentionCrossLayer layer("a", 4, 2);
  EXPECT_THROW(layer.set_temperature(-1.0), ParameterError);
  layer.set_temperature(2.5);
  EXPECT_NEAR(layer.temperature(), 2.5, 1e-12);
}

TEST(AttentionCross, ParameterCount) {
  AttentionCrossLayer layer("a", 8, 4);
  ParameterList ps;
  layer.collect(ps);
  EXPECT_EQ(count_elements(ps), layer.parameter_count());
  EXPECT_EQ(layer.parameter_count(), 4u * 8 * 4 + 8 + 1);
}

TEST(AttentionCross, GradientCheck) {
  for (int s = 0; s < kSeeds; ++s) EXPECT_LE(testing::gradcheck_attention_cross(s), kTol) << s;
}

// ---------------------------------------------------------------------------
// Residual DCN block

TEST(ResidualDcn, ZeroWeightsAreIdentity) {
  for (std::size_t layers : {1u, 2u, 5u}) {
    ResidualDcnBlock block("b", 4, 2, layers, true);
    const Tensor x = vec({0.3, -1, 2, 7});
    EXPECT_EQ(residual_dcn_forward(block, x), x);
  }
}

TEST(ResidualDcn, ZeroAttentionEqualsCrossForward) {
  Gen g(5);
  ResidualDcnBlock block("b", 5, 3, 1, true);
  block.plain()[0].init(g.rng());
  g.randomize(block.plain()[0].bias.value);
  const Tensor x = g.tensor(5);
  EXPECT_EQ(residual_dcn_forward(block, x), cross_forward(block.plain()[0], x, x));
}

TEST(ResidualDcn, TwoLayersEqualUnrolledApplications) {
  for (int s = 0; s < 10; ++s) {
    Gen g(s);
    ResidualDcnBlock block("b", 6, 3, 2, true, 0.7);
    block.init(g.rng());
    const Tensor x0 = g.tensor(6);
    Tensor x = x0;
    for (std::size_t l = 0; l < 2; ++l) {
      const Tensor p = cross_forward(block.plain()[l], x0, x);
      const Tensor a = attention_cross_forward(block.attention()[l], x0, x);
      Tensor next = x;
      // Each full forward includes x_l once; the block keeps a single residual.
      for (std::size_t i = 0; i < 6; ++i) next[i] = x[i] + (p[i] - x[i]) + (a[i] - x[i]);
      x = next;
    }
    const Tensor got = residual_dcn_forward(block, x0);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(got[i], x[i], 1e-12);
  }
}

TEST(ResidualDcn, ParameterCountIsSumOfLayers) {
  ResidualDcnBlock block("b", 8, 4, 3, true);
  ParameterList ps;
  block.collect(ps);
  EXPECT_EQ(block.parameter_count(), 3 * (8u * 4 * 2 + 8) + 3 * (4u * 8 * 4 + 8 + 1));
  EXPECT_EQ(count_elements(ps), block.parameter_count());
}

TEST(ResidualDcn, DimensionMismatch) {
  ResidualDcnBlock block("b", 4, 2, 1, true);
  EXPECT_THROW(residual_dcn_forward(block, vec({1, 2})), DimensionError);
}

TEST(ResidualDcn, GradientCheckWithAttention) {
  for (int s = 0; s < kSeeds; ++s) EXPECT_LE(testing::gradcheck_residual_dcn(s, true), kTol) << s;
}

TEST(ResidualDcn, GradientCheckPlainOnly) {
  for (int s = 0; s < kSeeds; ++s) {
    EXPECT_LE(testing::gradcheck_residual_dcn(s, false), kTol) << s;
  }
}

// ---------------------------------------------------------------------------
// Gated dense and MLP

TEST(GatedDense, ClosedGateHalvesActivation) {
  Gen g(6);
  GatedDenseLayer layer("g", 3, 2, Activation::kTanh);
  layer.W.value = g.matrix(2, 3);
  layer.c.value = g.tensor(2);
  const Tensor x = g.tensor(3);
  const Tensor out = gated_forward(layer, x);
  for (std::size_t i = 0; i < 2; ++i) {
    double pre = layer.c.value[i];
    for (std::size_t j = 0; j < 3; ++j) pre += layer.W.value.at(i, j) * x[j];
    EXPECT_NEAR(out[i], 0.5 * std::tanh(pre), 1e-15);
  }
}

TEST(GatedDense, SaturatedGateMatchesPlainDense) {
  Gen g(7);
  GatedDenseLayer gated("g", 3, 2, Activation::kTanh);
  gated.W.value = g.matrix(2, 3);
  gated.c.value = g.tensor(2);
  gated.cg.value.fill(30.0);
  DenseLayer plain("d", 3, 2, Activation::kTanh);
  plain.W.value = gated.W.value;
  plain.c.value = gated.c.value;
  const Tensor x = g.tensor(3);
  GatedDenseLayer::Cache gc;
  DenseLayer::Cache dc;
  const Vec a = gated.forward(x.span(), gc);
  const Vec b = plain.forward(x.span(), dc);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(gc.gate[i], 1.0, 1e-9);
    EXPECT_NEAR(a[i], b[i], 1e-9);
  }
}

TEST(GatedDense, MatchesTwoStepOracle) {
  for (int s = 0; s < 10; ++s) {
    Gen g(s);
    GatedDenseLayer layer("g", 4, 3, Activation::kTanh);
    layer.init(g.rng());
    g.randomize(layer.cg.value);
    const Tensor x = g.tensor(4);
    const Tensor out = gated_forward(layer, x);
    for (std::size_t i = 0; i < 3; ++i) {
      double pre = layer.c.value[i], gp = layer.cg.value[i];
      for (std::size_t j = 0; j < 4; ++j) {
        pre += layer.W.value.at(i, j) * x[j];
        gp += layer.Wg.value.at(i, j) * x[j];
      }
      EXPECT_NEAR(out[i], std::tanh(pre) / (1.0 + std::exp(-gp)), 1e-14);
    }
  }
}

TEST(GatedDense, DimensionMismatch) {
  GatedDenseLayer layer("g", 3, 2, Activation::kTanh);
  EXPECT_THROW(gated_forward(layer, vec({1, 2})), DimensionError);
}

TEST(GatedDense, GradientCheck) {
  for (int s = 0; s < kSeeds; ++s) EXPECT_LE(testing::gradcheck_gated_dense(s), kTol) << s;
}

TEST(Mlp, GradientCheckPlain) {
  for (int s = 0; s < kSeeds; ++s) EXPECT_LE(testing::gradcheck_mlp(s, false), kTol) << s;
}

TEST(Mlp, GradientCheckGated) {
  for (int s = 0; s < kSeeds; ++s) EXPECT_LE(testing::gradcheck_mlp(s, true), kTol) << s;
}

TEST(Mlp, ParameterCount) {
  MlpTower tower("t", 10, {8, 4}, 2, false);
  ParameterList ps;
  tower.collect(ps);
  EXPECT_EQ(tower.parameter_count(), (10u * 8 + 8) + (8u * 4 + 4) + (4u * 2 + 2));
  EXPECT_EQ(count_elements(ps), tower.parameter_count());
  EXPECT_EQ(tower.penultimate_dim(), 4u);
}

TEST(Activation, Values) {
  EXPECT_EQ(activate(Activation::kRelu, -1.0), 0.0);
  EXPECT_EQ(activate(Activation::kIdentity, -1.5), -1.5);
  EXPECT_NEAR(activate_grad(Activation::kTanh, 0.3), 1.0 - std::tanh(0.3) * std::tanh(0.3),
              1e-15);
  EXPECT_NEAR(sigmoid(0.0), 0.5, 0.0);
  EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(100.0), 100.0, 1e-12);
}

}  // namespace
}  // namespace rankkit
