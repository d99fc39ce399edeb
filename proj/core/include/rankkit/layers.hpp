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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rankkit/tensor.hpp"

namespace rankkit {

class Rng;

using Vec = std::vector<double>;

enum class Activation { kTanh, kRelu, kIdentity };

double activate(Activation a, double x);
/// Derivative expressed through the pre-activation value.
double activate_grad(Activation a, double pre);
double sigmoid(double x);
double softplus(double x);

/// Low-rank cross layer: x_{l+1} = x0 * (U (V^T x_l) + b) + x_l with U, V of
/// shape d x r. The "delta" is everything but the trailing residual x_l.
class LowRankCrossLayer {
 public:
  LowRankCrossLayer() = default;
  LowRankCrossLayer(const std::string& prefix, std::size_t dim, std::size_t rank);

  struct Cache {
    Vec proj;  // V^T x_l, length r
    Vec h;     // U proj + b, length d
  };

  void init(Rng& rng);
  std::size_t dim() const { return dim_; }
  std::size_t rank() const { return rank_; }

  /// out = x0 * (U (V^T xl) + b)
  void delta(std::span<const double> x0, std::span<const double> xl, std::span<double> out,
             Cache& cache) const;
  /// Accumulates parameter gradients and adds d(delta)/d(x0), d(delta)/d(xl)
  /// contributions into dx0 and dxl.
  void delta_backward(const Cache& cache, std::span<const double> x0,
                      std::span<const double> xl, std::span<const double> ddelta,
                      std::span<double> dx0, std::span<double> dxl);

  void collect(ParameterList& out);
  std::size_t parameter_count() const { return 2 * dim_ * rank_ + dim_; }

  Parameter U;
  Parameter V;
  Parameter bias;

 private:
  std::size_t dim_ = 0;
  std::size_t rank_ = 0;
};

/// Attention variant of the low-rank cross layer. Three projections of x_l
/// into the rank-r space (query, key, value); the r x r score matrix
/// S = softmax_rows(q k^T / (tau sqrt(r))) mixes the value coordinates before
/// the up-projection: delta = x0 * (U_a (S v) + b_a).
///
/// tau = softplus(raw_temperature) so it stays positive while trainable.
class AttentionCrossLayer {
 public:
  AttentionCrossLayer() = default;
  AttentionCrossLayer(const std::string& prefix, std::size_t dim, std::size_t rank,
                      double temperature = 1.0);

  struct Cache {
    Vec q, k, v;  // length r
    Tensor scores;  // r x r, post-softmax
    Vec mixed;      // S v
    Vec h;          // U_a mixed + b_a
  };

  void init(Rng& rng);
  std::size_t dim() const { return dim_; }
  std::size_t rank() const { return rank_; }
  double temperature() const;
  void set_temperature(double tau);

  void delta(std::span<const double> x0, std::span<const double> xl, std::span<double> out,
             Cache& cache) const;
  void delta_backward(const Cache& cache, std::span<const double> x0,
                      std::span<const double> xl, std::span<const double> ddelta,
                      std::span<double> dx0, std::span<double> dxl);

  void collect(ParameterList& out);
  std::size_t parameter_count() const { return 4 * dim_ * rank_ + dim_ + 1; }

  Parameter Vq;
  Parameter Vk;
  Parameter Vv;
  Parameter Ua;
  Parameter bias;
  Parameter raw_temperature;  // shape {1}

  /// Test hook: pin the score matrix to the identity.
  bool force_identity_scores = false;

 private:
  std::size_t dim_ = 0;
  std::size_t rank_ = 0;
};

/// Full forward of a single cross layer, residual included.
Tensor cross_forward(const LowRankCrossLayer& layer, const Tensor& x0, const Tensor& xl);
Tensor attention_cross_forward(const AttentionCrossLayer& layer, const Tensor& x0,
                               const Tensor& xl);

/// Stack of layer_count cross layers. Each layer runs the plain low-rank
/// branch and, when enabled, the attention branch on the same (x0, x_l); the
/// branch deltas are summed with one residual:
///   x_{l+1} = x_l + plain_delta(x0, x_l) + attn_delta(x0, x_l).
class ResidualDcnBlock {
 public:
  ResidualDcnBlock() = default;
  ResidualDcnBlock(const std::string& prefix, std::size_t dim, std::size_t rank,
                   std::size_t layer_count, bool use_attention, double temperature = 1.0);

  struct Cache {
    std::vector<Vec> xs;  // x_0 .. x_L
    std::vector<LowRankCrossLayer::Cache> plain;
    std::vector<AttentionCrossLayer::Cache> attn;
  };

  void init(Rng& rng);
  std::size_t dim() const { return dim_; }
  std::size_t layer_count() const { return plain_.size(); }
  bool use_attention() const { return use_attention_; }

  Vec forward(std::span<const double> x, Cache& cache) const;
  /// dx receives (not accumulates) the input gradient.
  void backward(const Cache& cache, std::span<const double> dout, std::span<double> dx);

  void collect(ParameterList& out);
  std::size_t parameter_count() const;

  std::vector<LowRankCrossLayer>& plain() { return plain_; }
  std::vector<AttentionCrossLayer>& attention() { return attn_; }
  const std::vector<LowRankCrossLayer>& plain() const { return plain_; }
  const std::vector<AttentionCrossLayer>& attention() const { return attn_; }

 private:
  std::size_t dim_ = 0;
  bool use_attention_ = true;
  std::vector<LowRankCrossLayer> plain_;
  std::vector<AttentionCrossLayer> attn_;
};

Tensor residual_dcn_forward(const ResidualDcnBlock& block, const Tensor& x);

/// y = act(W x + c).
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(const std::string& prefix, std::size_t in, std::size_t out, Activation act);

  struct Cache {
    Vec x;
    Vec pre;
  };

  void init(Rng& rng);
  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }
  Vec forward(std::span<const double> x, Cache& cache) const;
  void backward(const Cache& cache, std::span<const double> dout, std::span<double> dx);
  void collect(ParameterList& out);
  std::size_t parameter_count() const { return in_ * out_ + out_; }

  Parameter W;
  Parameter c;
  Activation activation = Activation::kTanh;

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
};

/// y = act(W x + c) * sigmoid(W_g x + c_g). The gate is always a sigmoid.
class GatedDenseLayer {
 public:
  GatedDenseLayer() = default;
  GatedDenseLayer(const std::string& prefix, std::size_t in, std::size_t out, Activation act);

  struct Cache {
    Vec x;
    Vec pre;
    Vec gate;  // sigmoid(W_g x + c_g)
  };

  void init(Rng& rng);
  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }
  Vec forward(std::span<const double> x, Cache& cache) const;
  void backward(const Cache& cache, std::span<const double> dout, std::span<double> dx);
  void collect(ParameterList& out);
  std::size_t parameter_count() const { return 2 * (in_ * out_ + out_); }

  Parameter W;
  Parameter c;
  Parameter Wg;
  Parameter cg;
  Activation activation = Activation::kTanh;

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
};

Tensor gated_forward(const GatedDenseLayer& layer, const Tensor& x);

/// Hidden stack (plain or gated) followed by a linear output layer emitting
/// one logit per task assigned to the tower.
class MlpTower {
 public:
  MlpTower() = default;
  MlpTower(const std::string& prefix, std::size_t in, const std::vector<std::size_t>& hidden,
           std::size_t outputs, bool gated, Activation act = Activation::kTanh);

  struct Cache {
    std::vector<DenseLayer::Cache> dense;
    std::vector<GatedDenseLayer::Cache> gated;
    DenseLayer::Cache head;
    Vec penultimate;
  };

  void init(Rng& rng);
  Vec forward(std::span<const double> x, Cache& cache) const;
  void backward(const Cache& cache, std::span<const double> dout, std::span<double> dx);
  void collect(ParameterList& out);
  std::size_t parameter_count() const;
  std::size_t outputs() const { return head_.out_dim(); }
  std::size_t penultimate_dim() const { return head_.in_dim(); }
  bool gated() const { return gated_; }

  DenseLayer& head() { return head_; }
  const DenseLayer& head() const { return head_; }

 private:
  bool gated_ = false;
  std::vector<DenseLayer> dense_;
  std::vector<GatedDenseLayer> gated_layers_;
  DenseLayer head_;
};

}  // namespace rankkit
