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
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rankkit/example.hpp"
#include "rankkit/tensor.hpp"

namespace rankkit {

class MultiTaskModel;

enum class OptimizerKind { kAdam, kAdagrad };

inline constexpr double kMaxWarmupFraction = 0.6;

enum class LrDecay { kNone, kLinear };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double peak_learning_rate = 0.003;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double adagrad_epsilon = 1e-8;
  // Set by the training loop from epochs and batch size when left at 0.
  std::int64_t total_steps = 0;
  double warmup_fraction = 0.05;
  double clip_global_norm = 1.0;
  std::size_t batch_size = 256;
  std::size_t epochs = 4;
  // Post-warmup shape. kLinear falls from peak to peak / (T - W) at the last
  // step; off by default.
  LrDecay decay = LrDecay::kNone;

  /// Throws ConfigError on out-of-range values (warmup_fraction > 0.6, ...).
  void validate() const;
};

/// Doubling the batch doubles the warmup fraction, capped at 0.6. Batches
/// smaller than base_batch keep base_fraction.
double warmup_fraction_for_batch(double base_fraction, std::size_t base_batch, std::size_t batch);

std::int64_t warmup_steps(const OptimizerConfig& config);

/// Linear ramp peak * (step + 1) / W over the first W warmup steps, then
/// constant at peak, or peak * (T - step) / (T - W) with linear decay.
double learning_rate(std::int64_t step, const OptimizerConfig& config);

/// Global-norm clipping over every active gradient element. Returns the
/// applied factor (1.0 when the norm is within bound). Non-finite gradients
/// raise DivergenceError tagged with step.
double clip_global(const ParameterList& params, double clip_norm, std::int64_t step = -1);
double global_grad_norm(const ParameterList& params);

/// Adam with bias correction. step_index is 1-based. Row-sparse parameters
/// update only the rows touched since their last zero_grad (lazy Adam).
void adam_step(const ParameterList& params, double lr, const OptimizerConfig& config,
               std::int64_t step_index);
/// A += g^2; w -= lr g / sqrt(A + eps).
void adagrad_step(const ParameterList& params, double lr, const OptimizerConfig& config);

void zero_grads(const ParameterList& params);

// ---------------------------------------------------------------------------
// Incremental training

/// Per-parameter weights and diagonal Fisher captured after a training cycle.
struct Snapshot {
  std::map<std::string, Tensor> weights;
  std::map<std::string, Tensor> fisher;

  static Snapshot capture(const ParameterList& params);
};

struct IncrementalConfig {
  double forgetting = 1.0;   // lambda_f
  double cold_weight = 0.2;  // alpha
  // Epoch budget for incremental cycles.
  std::size_t epochs = 1;
  // Examples used for the Fisher estimate.
  std::size_t fisher_cap = 100000;

  void validate() const;
};

/// lambda_f / 2 * [alpha sum H0 (w - w0)^2 + (1 - alpha) sum Hp (w - wp)^2]
/// using diagonal Fisher entries, over all parameters.
double incremental_penalty(const ParameterList& params, const IncrementalConfig& config,
                           const Snapshot& cold, const Snapshot& prior);

/// Adds lambda_f [alpha H0 (w - w0) + (1 - alpha) Hp (w - wp)] to the
/// gradients. Row-sparse parameters only receive it on their active rows.
void add_incremental_penalty_grad(const ParameterList& params, const IncrementalConfig& config,
                                  const Snapshot& cold, const Snapshot& prior);

/// alpha w0 + (1 - alpha) wp, elementwise.
Tensor incremental_init(const Tensor& cold, const Tensor& prior, double alpha);
void incremental_init(const ParameterList& params, const Snapshot& cold, const Snapshot& prior,
                      double alpha);

/// Empirical Fisher diagonal: mean over (at most cap) examples of the squared
/// per-example gradient of the total multi-task loss. Stored into each
/// parameter's fisher_diag and returned in registration order.
std::vector<Tensor> fisher_diag(MultiTaskModel& model, const Dataset& data,
                                std::size_t cap = 100000);

// ---------------------------------------------------------------------------
// Training loop

struct IncrementalSetup {
  IncrementalConfig config;
  Snapshot cold;
  Snapshot prior;
};

struct TrainOptions {
  OptimizerConfig optimizer;
  std::optional<IncrementalSetup> incremental;
  std::uint64_t shuffle_seed = 0;
  std::function<void(std::size_t epoch, double mean_loss)> on_epoch;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::int64_t steps = 0;
};

/// Minibatch training with warmup, global clipping, and the optional
/// incremental penalty. Examples are reshuffled every epoch.
TrainReport train(MultiTaskModel& model, const Dataset& data, const TrainOptions& options);

}  // namespace rankkit
