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


#pragma once

// Finite-difference checks for every trainable component. Each function
// builds a random instance from a seed and returns the largest relative error
// between analytic and central-difference gradients, inputs included.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "generators.hpp"
#include "rankkit/calibration.hpp"
#include "rankkit/embeddings.hpp"
#include "rankkit/layers.hpp"

namespace rankkit::testing {

// Objective f(out) = sum r_i out_i + 0.5 sum out_i^2 so that every output
// coordinate contributes a distinct upstream gradient.
inline double probe_objective(const Vec& out, const Vec& r) {
  double f = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) f += r[i] * out[i] + 0.5 * out[i] * out[i];
  return f;
}
inline Vec probe_grad(const Vec& out, const Vec& r) {
  Vec g(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) g[i] = r[i] + out[i];
  return g;
}

inline void zero_all(const ParameterList& params) {
  for (auto* p : params) p->zero_grad();
}

inline void copy_to_grad(Parameter& p, const Vec& g) {
  for (std::size_t i = 0; i < g.size(); ++i) p.grad[i] = g[i];
}

inline double gradcheck_lowrank_cross(std::uint64_t seed) {
  Gen g(seed);
  const std::size_t d = g.size(2, 8), r = g.size(1, std::min<std::size_t>(d, 4));
  LowRankCrossLayer layer("c", d, r);
  layer.init(g.rng());
  g.randomize(layer.bias.value, -0.5, 0.5);
  Parameter x0 = input_param("x0", g.vec(d)), xl = input_param("xl", g.vec(d));
  const Vec probe = g.vec(d);
  ParameterList params;
  layer.collect(params);
  params.push_back(&x0);
  params.push_back(&xl);

  auto run = [&](LowRankCrossLayer::Cache& cache) {
    Vec out(d);
    layer.delta(x0.value.span(), xl.value.span(), out, cache);
    for (std::size_t i = 0; i < d; ++i) out[i] += xl.value[i];
    return out;
  };
  auto loss = [&] {
    LowRankCrossLayer::Cache c;
    return probe_objective(run(c), probe);
  };
  auto analytic = [&] {
    zero_all(params);
    LowRankCrossLayer::Cache c;
    const Vec dout = probe_grad(run(c), probe);
    Vec dx0(d, 0.0), dxl = dout;
    layer.delta_backward(c, x0.value.span(), xl.value.span(), dout, dx0, dxl);
    copy_to_grad(x0, dx0);
    copy_to_grad(xl, dxl);
  };
  return check_gradients(params, loss, analytic).max_rel_error;
}

inline double gradcheck_attention_cross(std::uint64_t seed) {
  Gen g(seed);
  const std::size_t d = g.size(2, 8), r = g.size(1, std::min<std::size_t>(d, 4));
  AttentionCrossLayer layer("a", d, r, g.real(0.3, 2.0));
  layer.init(g.rng());
  // Larger projections keep the softmax away from uniform.
  for (auto* t : {&layer.Vq.value, &layer.Vk.value}) g.randomize(*t, -1.5, 1.5);
  g.randomize(layer.bias.value, -0.5, 0.5);
  Parameter x0 = input_param("x0", g.vec(d)), xl = input_param("xl", g.vec(d));
  const Vec probe = g.vec(d);
  ParameterList params;
  layer.collect(params);
  params.push_back(&x0);
  params.push_back(&xl);

  auto run = [&](AttentionCrossLayer::Cache& cache) {
    Vec out(d);
    layer.delta(x0.value.span(), xl.value.span(), out, cache);
    for (std::size_t i = 0; i < d; ++i) out[i] += xl.value[i];
    return out;
  };
  auto loss = [&] {
    AttentionCrossLayer::Cache c;
    return probe_objective(run(c), probe);
  };
  auto analytic = [&] {
    zero_all(params);
    AttentionCrossLayer::Cache c;
    const Vec dout = probe_grad(run(c), probe);
    Vec dx0(d, 0.0), dxl = dout;
    layer.delta_backward(c, x0.value.span(), xl.value.span(), dout, dx0, dxl);
    copy_to_grad(x0, dx0);
    copy_to_grad(xl, dxl);
  };
  return check_gradients(params, loss, analytic).max_rel_error;
}

inline double gradcheck_residual_dcn(std::uint64_t seed, bool use_attention = true) {
  Gen g(seed);
  const std::size_t d = g.size(2, 8), r = g.size(1, std::min<std::size_t>(d, 4));
  const std::size_t layers = g.size(1, 3);
  ResidualDcnBlock block("dcn", d, r, layers, use_attention, g.real(0.5, 2.0));
  block.init(g.rng());
  Parameter x = input_param("x", g.vec(d));
  const Vec probe = g.vec(d);
  ParameterList params;
  block.collect(params);
  params.push_back(&x);

  auto loss = [&] {
    ResidualDcnBlock::Cache c;
    return probe_objective(block.forward(x.value.span(), c), probe);
  };
  auto analytic = [&] {
    zero_all(params);
    ResidualDcnBlock::Cache c;
    const Vec dout = probe_grad(block.forward(x.value.span(), c), probe);
    Vec dx(d);
    block.backward(c, dout, dx);
    copy_to_grad(x, dx);
  };
  return check_gradients(params, loss, analytic).max_rel_error;
}

inline double gradcheck_gated_dense(std::uint64_t seed) {
  Gen g(seed);
  const std::size_t in = g.size(1, 8), out = g.size(1, 8);
  GatedDenseLayer layer("g", in, out, Activation::kTanh);
  layer.init(g.rng());
  g.randomize(layer.c.value, -0.5, 0.5);
  g.randomize(layer.cg.value, -0.5, 0.5);
  Parameter x = input_param("x", g.vec(in));
  const Vec probe = g.vec(out);
  ParameterList params;
  layer.collect(params);
  params.push_back(&x);
  auto loss = [&] {
    GatedDenseLayer::Cache c;
    return probe_objective(layer.forward(x.value.span(), c), probe);
  };
  auto analytic = [&] {
    zero_all(params);
    GatedDenseLayer::Cache c;
    const Vec dout = probe_grad(layer.forward(x.value.span(), c), probe);
    Vec dx(in);
    layer.backward(c, dout, dx);
    copy_to_grad(x, dx);
  };
  return check_gradients(params, loss, analytic).max_rel_error;
}

inline double gradcheck_mlp(std::uint64_t seed, bool gated = false) {
  Gen g(seed);
  const std::size_t in = g.size(1, 8);
  std::vector<std::size_t> hidden;
  for (std::size_t i = 0, n = g.size(1, 3); i < n; ++i) hidden.push_back(g.size(1, 8));
  const std::size_t outputs = g.size(1, 3);
  MlpTower tower("t", in, hidden, outputs, gated);
  tower.init(g.rng());
  Parameter x = input_param("x", g.vec(in));
  const Vec probe = g.vec(outputs);
  ParameterList params;
  tower.collect(params);
  params.push_back(&x);
  auto loss = [&] {
    MlpTower::Cache c;
    return probe_objective(tower.forward(x.value.span(), c), probe);
  };
  auto analytic = [&] {
    zero_all(params);
    MlpTower::Cache c;
    const Vec dout = probe_grad(tower.forward(x.value.span(), c), probe);
    Vec dx(in);
    tower.backward(c, dout, dx);
    copy_to_grad(x, dx);
  };
  return check_gradients(params, loss, analytic).max_rel_error;
}

// Isotonic layer away from its documented kinks: every raw slope is at least
// 1e-3 from zero and the input at least 1e-3 from a bucket edge.
inline double gradcheck_isotonic(std::uint64_t seed) {
  Gen g(seed);
  IsotonicConfig cfg;
  cfg.step = g.real(0.1, 0.5);
  cfg.bucket_count = g.size(4, 24);
  cfg.y_min = g.real(-3.0, 0.0);
  cfg.feature_rows = g.coin() ? g.size(1, 4) : 0;
  IsotonicLayer layer("iso", cfg);
  for (auto& v : layer.w.value.values()) v = g.real(-1.0, 2.0);
  layer.b.value[0] = g.real(-1.0, 1.0);
  if (layer.has_feature()) g.randomize(layer.embedding.value, -0.5, 0.5);

  const std::string calib = "d" + std::to_string(g.index(10));
  std::optional<std::string_view> calib_id;
  std::optional<std::size_t> row;
  if (layer.has_feature()) {
    calib_id = calib;
    row = layer.feature_row(calib);
  }
  for (std::size_t i = 0; i < cfg.bucket_count; ++i) {
    double s = layer.w.value[i] + (row ? layer.embedding.value.at(*row, i) : 0.0);
    if (std::abs(s) < 1e-3) layer.w.value[i] += 0.01;
  }
  const double span = cfg.step * static_cast<double>(cfg.bucket_count);
  double y;
  for (;;) {
    y = cfg.y_min + g.real(-1.0, span + 1.0);
    const double u = y - cfg.y_min;
    const double frac = u / cfg.step - std::floor(u / cfg.step);
    const double edge_dist = std::min(frac, 1.0 - frac) * cfg.step;
    if (std::abs(u) > 1e-3 && edge_dist > 1e-3) break;
  }
  Parameter yin = input_param("y", {y});
  const double probe = g.real(-1.0, 1.0);
  ParameterList params;
  layer.collect(params);
  params.push_back(&yin);
  auto loss = [&] {
    const double out = layer.forward(yin.value[0], calib_id);
    return probe * out + 0.5 * out * out;
  };
  auto analytic = [&] {
    zero_all(params);
    IsotonicLayer::Cache c;
    const double out = layer.forward(yin.value[0], calib_id, c);
    yin.grad[0] = layer.backward(c, probe + out);
  };
  return check_gradients(params, loss, analytic).max_rel_error;
}

// QR-hashed bag of ids (one repeated) feeding a tanh dense layer.
inline double gradcheck_qr_embedding(std::uint64_t seed, SplitMode split = SplitMode::kSingle32) {
  Gen g(seed);
  const std::size_t dim = g.size(2, 6);
  QRHashEmbedding emb("e", g.size(3, 9), g.size(3, 9), dim, split);
  emb.init(0.5, g.rng());
  DenseLayer dense("d", dim, g.size(1, 4), Activation::kTanh);
  dense.init(g.rng());
  std::vector<std::string> bag;
  for (std::size_t i = 0, n = g.size(1, 4); i < n; ++i) bag.push_back(g.id("x", 1000));
  bag.push_back(bag.front());
  const Vec probe = g.vec(dense.out_dim());

  ParameterList params;
  for (auto* t : emb.tables()) params.push_back(&t->param);
  dense.collect(params);

  auto pooled = [&] {
    Vec e(dim, 0.0);
    for (const auto& id : bag) emb.lookup_acc(id, e);
    return e;
  };
  auto loss = [&] {
    DenseLayer::Cache c;
    return probe_objective(dense.forward(pooled(), c), probe);
  };
  auto analytic = [&] {
    zero_all(params);
    DenseLayer::Cache c;
    const Vec dout = probe_grad(dense.forward(pooled(), c), probe);
    Vec de(dim);
    dense.backward(c, dout, de);
    for (const auto& id : bag) emb.backward(id, de);
  };
  return check_gradients(params, loss, analytic).max_rel_error;
}

}  // namespace rankkit::testing
