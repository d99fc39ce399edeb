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

#include "rankkit/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rankkit/error.hpp"
#include "rankkit/log.hpp"
#include "rankkit/model.hpp"
#include "rankkit/rng.hpp"

namespace rankkit {

void OptimizerConfig::validate() const {
  if (!(peak_learning_rate > 0.0)) throw ConfigError("peak_learning_rate must be > 0");
  if (!(warmup_fraction >= 0.0) || warmup_fraction > kMaxWarmupFraction) {
    throw ConfigError("warmup_fraction must lie in [0, 0.6]: warmup is capped at 60% of "
                      "training steps");
  }
  if (!(clip_global_norm > 0.0)) throw ConfigError("clip_global_norm must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0) || !(adagrad_epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (total_steps < 0) throw ConfigError("total_steps must be >= 0");
}

double warmup_fraction_for_batch(double base_fraction, std::size_t base_batch, std::size_t batch) {
  if (!(base_fraction > 0.0) || base_fraction > kMaxWarmupFraction) {
    throw ParameterError("base warmup fraction must lie in (0, 0.6]");
  }
  if (base_batch == 0 || batch == 0) throw ParameterError("batch sizes must be positive");
  if (batch <= base_batch) return base_fraction;
  return std::min(kMaxWarmupFraction,
                  base_fraction * static_cast<double>(batch) / static_cast<double>(base_batch));
}

std::int64_t warmup_steps(const OptimizerConfig& config) {
  return std::llround(config.warmup_fraction * static_cast<double>(config.total_steps));
}

double learning_rate(std::int64_t step, const OptimizerConfig& config) {
  const std::int64_t w = warmup_steps(config);
  if (step < 0) throw ParameterError("negative step");
  // The last warmup step returns peak exactly so the schedule never dips.
  if (w > 0 && step + 1 < w) {
    return config.peak_learning_rate * static_cast<double>(step + 1) / static_cast<double>(w);
  }
  const std::int64_t t = config.total_steps;
  if (config.decay == LrDecay::kNone || step < w || t <= w) return config.peak_learning_rate;
  const std::int64_t left = std::max<std::int64_t>(t - step, 1);
  // Ratio first: it is exactly 1 at step w, so the rate never exceeds peak.
  return config.peak_learning_rate * (static_cast<double>(left) / static_cast<double>(t - w));
}

double global_grad_norm(const ParameterList& params) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    p->for_each_active([&](std::size_t i) { sq += p->grad[i] * p->grad[i]; });
  }
  return std::sqrt(sq);
}

double clip_global(const ParameterList& params, double clip_norm, std::int64_t step) {
  const double norm = global_grad_norm(params);
  if (!std::isfinite(norm)) throw DivergenceError("non-finite gradient", step);
  if (norm <= clip_norm) return 1.0;
  const double factor = clip_norm / norm;
  for (Parameter* p : params) {
    p->for_each_active([&](std::size_t i) { p->grad[i] *= factor; });
  }
  return factor;
}

namespace {

void ensure_slots(Parameter& p, bool need_m) {
  if (need_m && p.slot_m.shape() != p.value.shape()) p.slot_m = Tensor(p.value.shape());
  if (p.slot_v.shape() != p.value.shape()) p.slot_v = Tensor(p.value.shape());
}

}  // namespace

void adam_step(const ParameterList& params, double lr, const OptimizerConfig& config,
               std::int64_t step_index) {
  if (step_index < 1) throw ParameterError("adam step index is 1-based");
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double t = static_cast<double>(step_index);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (Parameter* p : params) {
    ensure_slots(*p, true);
    p->for_each_active([&](std::size_t i) {
      const double g = p->grad[i];
      double& m = p->slot_m[i];
      double& v = p->slot_v[i];
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g * g;
      const double mhat = m / c1;
      const double vhat = v / c2;
      p->value[i] -= lr * mhat / (std::sqrt(vhat) + config.adam_epsilon);
    });
  }
}

void adagrad_step(const ParameterList& params, double lr, const OptimizerConfig& config) {
  for (Parameter* p : params) {
    ensure_slots(*p, false);
    p->for_each_active([&](std::size_t i) {
      const double g = p->grad[i];
      double& acc = p->slot_v[i];
      acc += g * g;
      p->value[i] -= lr * g / std::sqrt(acc + config.adagrad_epsilon);
    });
  }
}

void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->zero_grad();
}

// ---------------------------------------------------------------------------
// Incremental training

Snapshot Snapshot::capture(const ParameterList& params) {
  Snapshot s;
  for (const Parameter* p : params) {
    s.weights[p->name] = p->value;
    s.fisher[p->name] = p->fisher_diag ? *p->fisher_diag : Tensor(p->value.shape());
  }
  return s;
}

void IncrementalConfig::validate() const {
  if (!(forgetting >= 0.0)) throw ConfigError("forgetting factor must be >= 0");
  if (!(cold_weight >= 0.0 && cold_weight <= 1.0)) {
    throw ConfigError("cold_weight must lie in [0, 1]");
  }
  if (epochs == 0) throw ConfigError("incremental epochs must be positive");
}

namespace {

struct Anchor {
  const Tensor* w0;
  const Tensor* h0;
  const Tensor* wp;
  const Tensor* hp;
};

const Tensor& lookup(const std::map<std::string, Tensor>& m, const Parameter& p,
                     const char* what) {
  auto it = m.find(p.name);
  if (it == m.end()) throw SnapshotError(std::string(what) + " has no entry for " + p.name);
  if (it->second.shape() != p.value.shape()) {
    throw SnapshotError(std::string(what) + " shape " + shape_string(it->second.shape()) +
                        " != " + shape_string(p.value.shape()) + " for " + p.name);
  }
  return it->second;
}

Anchor anchor_for(const Parameter& p, const Snapshot& cold, const Snapshot& prior) {
  return {&lookup(cold.weights, p, "cold snapshot"), &lookup(cold.fisher, p, "cold fisher"),
          &lookup(prior.weights, p, "prior snapshot"), &lookup(prior.fisher, p, "prior fisher")};
}

}  // namespace

double incremental_penalty(const ParameterList& params, const IncrementalConfig& config,
                           const Snapshot& cold, const Snapshot& prior) {
  const double alpha = config.cold_weight;
  double cold_term = 0.0;
  double prior_term = 0.0;
  for (const Parameter* p : params) {
    const Anchor a = anchor_for(*p, cold, prior);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double d0 = p->value[i] - (*a.w0)[i];
      const double dp = p->value[i] - (*a.wp)[i];
      cold_term += (*a.h0)[i] * d0 * d0;
      prior_term += (*a.hp)[i] * dp * dp;
    }
  }
  return 0.5 * config.forgetting * (alpha * cold_term + (1.0 - alpha) * prior_term);
}

void add_incremental_penalty_grad(const ParameterList& params, const IncrementalConfig& config,
                                  const Snapshot& cold, const Snapshot& prior) {
  const double alpha = config.cold_weight;
  const double lambda = config.forgetting;
  if (lambda == 0.0) return;
  for (Parameter* p : params) {
    const Anchor a = anchor_for(*p, cold, prior);
    p->for_each_active([&](std::size_t i) {
      const double w = p->value[i];
      p->grad[i] += lambda * (alpha * (*a.h0)[i] * (w - (*a.w0)[i]) +
                              (1.0 - alpha) * (*a.hp)[i] * (w - (*a.wp)[i]));
    });
  }
}

Tensor incremental_init(const Tensor& cold, const Tensor& prior, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("cold weight must lie in [0, 1]");
  if (!cold.same_shape(prior)) throw SnapshotError("cold and prior weights differ in shape");
  Tensor out(cold.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = alpha * cold[i] + (1.0 - alpha) * prior[i];
  }
  return out;
}

void incremental_init(const ParameterList& params, const Snapshot& cold, const Snapshot& prior,
                      double alpha) {
  for (Parameter* p : params) {
    p->value = incremental_init(lookup(cold.weights, *p, "cold snapshot"),
                                lookup(prior.weights, *p, "prior snapshot"), alpha);
  }
}

std::vector<Tensor> fisher_diag(MultiTaskModel& model, const Dataset& data, std::size_t cap) {
  const ParameterList params = model.parameters();
  std::vector<Tensor> fisher;
  fisher.reserve(params.size());
  for (const Parameter* p : params) fisher.emplace_back(p->value.shape());
  const std::size_t n = std::min(cap, data.size());
  if (n == 0) throw DataError("fisher_diag needs a non-empty dataset");

  zero_grads(params);
  for (std::size_t e = 0; e < n; ++e) {
    const TrainingExample* ex = &data[e];
    multitask_loss_and_grad(model, std::span<const TrainingExample* const>(&ex, 1));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Parameter* p = params[k];
      Tensor& f = fisher[k];
      p->for_each_active([&](std::size_t i) { f[i] += p->grad[i] * p->grad[i]; });
      p->zero_grad();
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (auto& v : fisher[k].span()) v *= inv;
    params[k]->fisher_diag = fisher[k];
  }
  return fisher;
}

// ---------------------------------------------------------------------------
// Training loop

TrainReport train(MultiTaskModel& model, const Dataset& data, const TrainOptions& options) {
  if (data.empty()) throw DataError("training data is empty");
  OptimizerConfig opt = options.optimizer;
  opt.validate();
  const std::size_t batch = opt.batch_size;
  const std::size_t batches_per_epoch = (data.size() + batch - 1) / batch;
  if (opt.total_steps == 0) {
    opt.total_steps = static_cast<std::int64_t>(batches_per_epoch * opt.epochs);
  }

  const ParameterList params = model.parameters();
  if (params.empty()) throw ConfigError("model has no trainable parameters");
  if (options.incremental) options.incremental->config.validate();

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle = Rng::stream(options.shuffle_seed, "shuffle");

  TrainReport report;
  std::vector<const TrainingExample*> mb;
  zero_grads(params);
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.uniform_int(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      if (report.steps >= opt.total_steps) break;
      mb.clear();
      const std::size_t end = std::min(data.size(), (b + 1) * batch);
      for (std::size_t i = b * batch; i < end; ++i) mb.push_back(&data[order[i]]);

      const double loss = multitask_loss_and_grad(model, mb);
      if (!std::isfinite(loss)) throw DivergenceError("non-finite loss", report.steps);
      if (options.incremental) {
        const auto& inc = *options.incremental;
        add_incremental_penalty_grad(params, inc.config, inc.cold, inc.prior);
      }
      clip_global(params, opt.clip_global_norm, report.steps);
      const double lr = learning_rate(report.steps, opt);
      if (opt.kind == OptimizerKind::kAdam) {
        adam_step(params, lr, opt, report.steps + 1);
      } else {
        adagrad_step(params, lr, opt);
      }
      zero_grads(params);
      epoch_loss += loss * static_cast<double>(mb.size());
      ++report.steps;
    }
    const double mean = epoch_loss / static_cast<double>(data.size());
    report.epoch_loss.push_back(mean);
    if (options.on_epoch) options.on_epoch(epoch, mean);
    log::debug("epoch " + std::to_string(epoch) + " loss " + std::to_string(mean));
  }
  return report;
}

}  // namespace rankkit
