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

#include "rankkit/layers.hpp"

#include <cmath>

#include "rankkit/error.hpp"
#include "rankkit/rng.hpp"

namespace rankkit {

using kernels::matvec;
using kernels::matvec_acc;
using kernels::matvec_t;
using kernels::outer_acc;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::kTanh: return std::tanh(x);
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kIdentity: return x;
  }
  return x;
}

double activate_grad(Activation a, double pre) {
  switch (a) {
    case Activation::kTanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
    case Activation::kRelu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

namespace {

void check_len(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) +
                         ", got " + std::to_string(v.size()));
  }
}

void check_vector(const Tensor& t, std::size_t n, const char* what) {
  if (t.rank() != 1) throw DimensionError(std::string(what) + " must be a vector");
  check_len(t.span(), n, what);
}

}  // namespace

// ---------------------------------------------------------------------------
// LowRankCrossLayer

LowRankCrossLayer::LowRankCrossLayer(const std::string& prefix, std::size_t dim,
                                     std::size_t rank)
    : U(prefix + "/U", Tensor::zeros(dim, rank)),
      V(prefix + "/V", Tensor::zeros(dim, rank)),
      bias(prefix + "/bias", Tensor::zeros(dim)),
      dim_(dim),
      rank_(rank) {
  if (dim == 0 || rank == 0 || rank > dim) {
    throw ParameterError("cross layer needs 0 < rank <= dim");
  }
}

void LowRankCrossLayer::init(Rng& rng) {
  xavier_uniform(U.value, rank_, dim_, rng);
  xavier_uniform(V.value, dim_, rank_, rng);
  bias.value.fill(0.0);
}

void LowRankCrossLayer::delta(std::span<const double> x0, std::span<const double> xl,
                              std::span<double> out, Cache& cache) const {
  check_len(x0, dim_, "x0");
  check_len(xl, dim_, "xl");
  check_len(out, dim_, "cross output");
  cache.proj.assign(rank_, 0.0);
  cache.h.assign(bias.value.span().begin(), bias.value.span().end());
  matvec_t(V.value, xl, cache.proj);
  matvec_acc(U.value, cache.proj, cache.h);
  for (std::size_t i = 0; i < dim_; ++i) out[i] = x0[i] * cache.h[i];
}

void LowRankCrossLayer::delta_backward(const Cache& cache, std::span<const double> x0,
                                       std::span<const double> xl,
                                       std::span<const double> ddelta, std::span<double> dx0,
                                       std::span<double> dxl) {
  Vec dh(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    dh[i] = ddelta[i] * x0[i];
    dx0[i] += ddelta[i] * cache.h[i];
  }
  outer_acc(U.grad, dh, cache.proj);
  kernels::axpy(1.0, dh, bias.grad.span());
  Vec dproj(rank_);
  matvec_t(U.value, dh, dproj);
  outer_acc(V.grad, xl, dproj);
  matvec_acc(V.value, dproj, dxl);
}

void LowRankCrossLayer::collect(ParameterList& out) {
  out.push_back(&U);
  out.push_back(&V);
  out.push_back(&bias);
}

Tensor cross_forward(const LowRankCrossLayer& layer, const Tensor& x0, const Tensor& xl) {
  check_vector(x0, layer.dim(), "x0");
  check_vector(xl, layer.dim(), "xl");
  Tensor out = xl;
  Vec delta(layer.dim());
  LowRankCrossLayer::Cache cache;
  layer.delta(x0.span(), xl.span(), delta, cache);
  for (std::size_t i = 0; i < delta.size(); ++i) out[i] = delta[i] + xl[i];
  return out;
}

// ---------------------------------------------------------------------------
// AttentionCrossLayer

AttentionCrossLayer::AttentionCrossLayer(const std::string& prefix, std::size_t dim,
                                         std::size_t rank, double temperature)
    : Vq(prefix + "/Vq", Tensor::zeros(dim, rank)),
      Vk(prefix + "/Vk", Tensor::zeros(dim, rank)),
      Vv(prefix + "/Vv", Tensor::zeros(dim, rank)),
      Ua(prefix + "/Ua", Tensor::zeros(dim, rank)),
      bias(prefix + "/bias", Tensor::zeros(dim)),
      raw_temperature(prefix + "/raw_temperature", Tensor::zeros(1)),
      dim_(dim),
      rank_(rank) {
  if (dim == 0 || rank == 0 || rank > dim) {
    throw ParameterError("attention cross layer needs 0 < rank <= dim");
  }
  set_temperature(temperature);
}

double AttentionCrossLayer::temperature() const { return softplus(raw_temperature.value[0]); }

void AttentionCrossLayer::set_temperature(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ParameterError("temperature must be > 0");
  // Inverse softplus; for large tau exp overflows, and softplus(x) == x there.
  raw_temperature.value[0] = tau > 30.0 ? tau : std::log(std::expm1(tau));
}

void AttentionCrossLayer::init(Rng& rng) {
  xavier_uniform(Vq.value, dim_, rank_, rng);
  xavier_uniform(Vk.value, dim_, rank_, rng);
  xavier_uniform(Vv.value, dim_, rank_, rng);
  xavier_uniform(Ua.value, rank_, dim_, rng);
  bias.value.fill(0.0);
}

void AttentionCrossLayer::delta(std::span<const double> x0, std::span<const double> xl,
                                std::span<double> out, Cache& cache) const {
  check_len(x0, dim_, "x0");
  check_len(xl, dim_, "xl");
  check_len(out, dim_, "attention output");
  const double tau = temperature();
  if (!(tau > 0.0)) throw ParameterError("temperature must be > 0");
  const std::size_t r = rank_;
  cache.q.assign(r, 0.0);
  cache.k.assign(r, 0.0);
  cache.v.assign(r, 0.0);
  matvec_t(Vq.value, xl, cache.q);
  matvec_t(Vk.value, xl, cache.k);
  matvec_t(Vv.value, xl, cache.v);

  if (force_identity_scores) {
    cache.scores = Tensor::zeros(r, r);
    for (std::size_t i = 0; i < r; ++i) cache.scores.at(i, i) = 1.0;
  } else {
    Tensor logits = Tensor::zeros(r, r);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) logits.at(i, j) = cache.q[i] * cache.k[j];
    }
    cache.scores = softmax_rows(logits, tau * std::sqrt(static_cast<double>(r)));
  }

  cache.mixed.assign(r, 0.0);
  matvec(cache.scores, cache.v, cache.mixed);
  cache.h.assign(bias.value.span().begin(), bias.value.span().end());
  matvec_acc(Ua.value, cache.mixed, cache.h);
  for (std::size_t i = 0; i < dim_; ++i) out[i] = x0[i] * cache.h[i];
}

void AttentionCrossLayer::delta_backward(const Cache& cache, std::span<const double> x0,
                                         std::span<const double> xl,
                                         std::span<const double> ddelta,
                                         std::span<double> dx0, std::span<double> dxl) {
  const std::size_t r = rank_;
  Vec dh(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    dh[i] = ddelta[i] * x0[i];
    dx0[i] += ddelta[i] * cache.h[i];
  }
  outer_acc(Ua.grad, dh, cache.mixed);
  kernels::axpy(1.0, dh, bias.grad.span());
  Vec dmixed(r);
  matvec_t(Ua.value, dh, dmixed);

  // mixed = S v
  Vec dv(r);
  matvec_t(cache.scores, dmixed, dv);

  Vec dq(r, 0.0);
  Vec dk(r, 0.0);
  if (!force_identity_scores) {
    const double tau = temperature();
    const double scale = 1.0 / (tau * std::sqrt(static_cast<double>(r)));
    double dtau = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      // dS_ij = dmixed_i v_j; softmax backward along the row.
      double row_dot = 0.0;
      for (std::size_t j = 0; j < r; ++j) row_dot += cache.scores.at(i, j) * dmixed[i] * cache.v[j];
      for (std::size_t j = 0; j < r; ++j) {
        const double s = cache.scores.at(i, j);
        const double dlogit = s * (dmixed[i] * cache.v[j] - row_dot);
        dq[i] += dlogit * scale * cache.k[j];
        dk[j] += dlogit * scale * cache.q[i];
        dtau -= dlogit * scale * cache.q[i] * cache.k[j] / tau;
      }
    }
    raw_temperature.grad[0] += dtau * sigmoid(raw_temperature.value[0]);
  }

  outer_acc(Vq.grad, xl, dq);
  outer_acc(Vk.grad, xl, dk);
  outer_acc(Vv.grad, xl, dv);
  matvec_acc(Vq.value, dq, dxl);
  matvec_acc(Vk.value, dk, dxl);
  matvec_acc(Vv.value, dv, dxl);
}

void AttentionCrossLayer::collect(ParameterList& out) {
  out.push_back(&Vq);
  out.push_back(&Vk);
  out.push_back(&Vv);
  out.push_back(&Ua);
  out.push_back(&bias);
  out.push_back(&raw_temperature);
}

Tensor attention_cross_forward(const AttentionCrossLayer& layer, const Tensor& x0,
                               const Tensor& xl) {
  check_vector(x0, layer.dim(), "x0");
  check_vector(xl, layer.dim(), "xl");
  Tensor out = xl;
  Vec delta(layer.dim());
  AttentionCrossLayer::Cache cache;
  layer.delta(x0.span(), xl.span(), delta, cache);
  for (std::size_t i = 0; i < delta.size(); ++i) out[i] = delta[i] + xl[i];
  return out;
}

// ---------------------------------------------------------------------------
// ResidualDcnBlock

ResidualDcnBlock::ResidualDcnBlock(const std::string& prefix, std::size_t dim,
                                   std::size_t rank, std::size_t layer_count,
                                   bool use_attention, double temperature)
    : dim_(dim), use_attention_(use_attention) {
  if (layer_count == 0) throw ParameterError("layer_count must be positive");
  plain_.reserve(layer_count);
  for (std::size_t l = 0; l < layer_count; ++l) {
    plain_.emplace_back(prefix + "/" + std::to_string(l) + "/cross", dim, rank);
    if (use_attention) {
      attn_.emplace_back(prefix + "/" + std::to_string(l) + "/attn", dim, rank, temperature);
    }
  }
}

void ResidualDcnBlock::init(Rng& rng) {
  for (std::size_t l = 0; l < plain_.size(); ++l) {
    plain_[l].init(rng);
    if (use_attention_) attn_[l].init(rng);
  }
}

Vec ResidualDcnBlock::forward(std::span<const double> x, Cache& cache) const {
  check_len(x, dim_, "dcn input");
  const std::size_t layers = plain_.size();
  cache.xs.assign(layers + 1, Vec());
  cache.xs[0].assign(x.begin(), x.end());
  cache.plain.resize(layers);
  cache.attn.resize(use_attention_ ? layers : 0);
  Vec delta(dim_);
  for (std::size_t l = 0; l < layers; ++l) {
    const Vec& xl = cache.xs[l];
    Vec next = xl;
    plain_[l].delta(cache.xs[0], xl, delta, cache.plain[l]);
    for (std::size_t i = 0; i < dim_; ++i) next[i] += delta[i];
    if (use_attention_) {
      attn_[l].delta(cache.xs[0], xl, delta, cache.attn[l]);
      for (std::size_t i = 0; i < dim_; ++i) next[i] += delta[i];
    }
    cache.xs[l + 1] = std::move(next);
  }
  return cache.xs.back();
}

void ResidualDcnBlock::backward(const Cache& cache, std::span<const double> dout,
                                std::span<double> dx) {
  check_len(dout, dim_, "dcn upstream gradient");
  Vec g(dout.begin(), dout.end());
  Vec dx0(dim_, 0.0);
  for (std::size_t l = plain_.size(); l-- > 0;) {
    Vec dxl = g;  // residual path
    plain_[l].delta_backward(cache.plain[l], cache.xs[0], cache.xs[l], g, dx0, dxl);
    if (use_attention_) {
      attn_[l].delta_backward(cache.attn[l], cache.xs[0], cache.xs[l], g, dx0, dxl);
    }
    g = std::move(dxl);
  }
  for (std::size_t i = 0; i < dim_; ++i) dx[i] = g[i] + dx0[i];
}

void ResidualDcnBlock::collect(ParameterList& out) {
  for (std::size_t l = 0; l < plain_.size(); ++l) {
    plain_[l].collect(out);
    if (use_attention_) attn_[l].collect(out);
  }
}

std::size_t ResidualDcnBlock::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : plain_) n += p.parameter_count();
  for (const auto& a : attn_) n += a.parameter_count();
  return n;
}

Tensor residual_dcn_forward(const ResidualDcnBlock& block, const Tensor& x) {
  check_vector(x, block.dim(), "x");
  ResidualDcnBlock::Cache cache;
  return Tensor::vector(block.forward(x.span(), cache));
}

// ---------------------------------------------------------------------------
// Dense and gated layers

DenseLayer::DenseLayer(const std::string& prefix, std::size_t in, std::size_t out,
                       Activation act)
    : W(prefix + "/W", Tensor::zeros(out, in)),
      c(prefix + "/c", Tensor::zeros(out)),
      activation(act),
      in_(in),
      out_(out) {}

void DenseLayer::init(Rng& rng) {
  xavier_uniform(W.value, in_, out_, rng);
  c.value.fill(0.0);
}

Vec DenseLayer::forward(std::span<const double> x, Cache& cache) const {
  check_len(x, in_, "dense input");
  cache.x.assign(x.begin(), x.end());
  cache.pre.assign(c.value.span().begin(), c.value.span().end());
  matvec_acc(W.value, x, cache.pre);
  Vec y(out_);
  for (std::size_t i = 0; i < out_; ++i) y[i] = activate(activation, cache.pre[i]);
  return y;
}

void DenseLayer::backward(const Cache& cache, std::span<const double> dout,
                          std::span<double> dx) {
  Vec dpre(out_);
  for (std::size_t i = 0; i < out_; ++i) dpre[i] = dout[i] * activate_grad(activation, cache.pre[i]);
  outer_acc(W.grad, dpre, cache.x);
  kernels::axpy(1.0, dpre, c.grad.span());
  matvec_t(W.value, dpre, dx);
}

void DenseLayer::collect(ParameterList& out) {
  out.push_back(&W);
  out.push_back(&c);
}

GatedDenseLayer::GatedDenseLayer(const std::string& prefix, std::size_t in, std::size_t out,
                                 Activation act)
    : W(prefix + "/W", Tensor::zeros(out, in)),
      c(prefix + "/c", Tensor::zeros(out)),
      Wg(prefix + "/Wg", Tensor::zeros(out, in)),
      cg(prefix + "/cg", Tensor::zeros(out)),
      activation(act),
      in_(in),
      out_(out) {}

void GatedDenseLayer::init(Rng& rng) {
  xavier_uniform(W.value, in_, out_, rng);
  xavier_uniform(Wg.value, in_, out_, rng);
  c.value.fill(0.0);
  cg.value.fill(0.0);
}

Vec GatedDenseLayer::forward(std::span<const double> x, Cache& cache) const {
  check_len(x, in_, "gated input");
  cache.x.assign(x.begin(), x.end());
  cache.pre.assign(c.value.span().begin(), c.value.span().end());
  matvec_acc(W.value, x, cache.pre);
  Vec gpre(cg.value.span().begin(), cg.value.span().end());
  matvec_acc(Wg.value, x, gpre);
  cache.gate.resize(out_);
  Vec y(out_);
  for (std::size_t i = 0; i < out_; ++i) {
    cache.gate[i] = sigmoid(gpre[i]);
    y[i] = activate(activation, cache.pre[i]) * cache.gate[i];
  }
  return y;
}

void GatedDenseLayer::backward(const Cache& cache, std::span<const double> dout,
                               std::span<double> dx) {
  Vec dpre(out_);
  Vec dgpre(out_);
  for (std::size_t i = 0; i < out_; ++i) {
    const double g = cache.gate[i];
    dpre[i] = dout[i] * g * activate_grad(activation, cache.pre[i]);
    dgpre[i] = dout[i] * activate(activation, cache.pre[i]) * g * (1.0 - g);
  }
  outer_acc(W.grad, dpre, cache.x);
  kernels::axpy(1.0, dpre, c.grad.span());
  outer_acc(Wg.grad, dgpre, cache.x);
  kernels::axpy(1.0, dgpre, cg.grad.span());
  matvec_t(W.value, dpre, dx);
  kernels::matvec_t_acc(Wg.value, dgpre, dx);
}

void GatedDenseLayer::collect(ParameterList& out) {
  out.push_back(&W);
  out.push_back(&c);
  out.push_back(&Wg);
  out.push_back(&cg);
}

Tensor gated_forward(const GatedDenseLayer& layer, const Tensor& x) {
  check_vector(x, layer.in_dim(), "x");
  GatedDenseLayer::Cache cache;
  return Tensor::vector(layer.forward(x.span(), cache));
}

// ---------------------------------------------------------------------------
// MlpTower

MlpTower::MlpTower(const std::string& prefix, std::size_t in,
                   const std::vector<std::size_t>& hidden, std::size_t outputs, bool gated,
                   Activation act)
    : gated_(gated) {
  std::size_t width = in;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const std::string name = prefix + "/hidden" + std::to_string(i);
    if (gated) {
      gated_layers_.emplace_back(name, width, hidden[i], act);
    } else {
      dense_.emplace_back(name, width, hidden[i], act);
    }
    width = hidden[i];
  }
  head_ = DenseLayer(prefix + "/head", width, outputs, Activation::kIdentity);
}

void MlpTower::init(Rng& rng) {
  for (auto& l : dense_) l.init(rng);
  for (auto& l : gated_layers_) l.init(rng);
  head_.init(rng);
}

Vec MlpTower::forward(std::span<const double> x, Cache& cache) const {
  Vec h(x.begin(), x.end());
  cache.dense.resize(dense_.size());
  cache.gated.resize(gated_layers_.size());
  for (std::size_t i = 0; i < dense_.size(); ++i) h = dense_[i].forward(h, cache.dense[i]);
  for (std::size_t i = 0; i < gated_layers_.size(); ++i) {
    h = gated_layers_[i].forward(h, cache.gated[i]);
  }
  cache.penultimate = h;
  return head_.forward(h, cache.head);
}

void MlpTower::backward(const Cache& cache, std::span<const double> dout, std::span<double> dx) {
  Vec g(head_.in_dim());
  head_.backward(cache.head, dout, g);
  for (std::size_t i = gated_layers_.size(); i-- > 0;) {
    Vec below(gated_layers_[i].in_dim());
    gated_layers_[i].backward(cache.gated[i], g, below);
    g = std::move(below);
  }
  for (std::size_t i = dense_.size(); i-- > 0;) {
    Vec below(dense_[i].in_dim());
    dense_[i].backward(cache.dense[i], g, below);
    g = std::move(below);
  }
  check_len(dx, g.size(), "tower input gradient");
  std::copy(g.begin(), g.end(), dx.begin());
}

void MlpTower::collect(ParameterList& out) {
  for (auto& l : dense_) l.collect(out);
  for (auto& l : gated_layers_) l.collect(out);
  head_.collect(out);
}

std::size_t MlpTower::parameter_count() const {
  std::size_t n = head_.parameter_count();
  for (const auto& l : dense_) n += l.parameter_count();
  for (const auto& l : gated_layers_) n += l.parameter_count();
  return n;
}

}  // namespace rankkit
