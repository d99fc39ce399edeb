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

#include "rankkit/model.hpp"

#include <algorithm>
#include <cmath>

#include "rankkit/error.hpp"
#include "rankkit/log.hpp"
#include "rankkit/rng.hpp"

namespace rankkit {
namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::unique_ptr<IdEmbedding> make_embedding(const std::string& name, const EmbeddingConfig& cfg) {
  switch (cfg.kind) {
    case EmbeddingKind::kQr:
      return std::make_unique<QRHashEmbedding>(name, cfg.quotient_size, cfg.remainder_size,
                                               cfg.dim, cfg.split, cfg.aggregation);
    case EmbeddingKind::kDenseHash:
      return std::make_unique<DenseHashEmbedding>(name, cfg.dense_rows, cfg.dim);
  }
  throw ConfigError("unknown embedding kind");
}

MultiTaskModel::MultiTaskModel(ModelConfig config) : config_(std::move(config)) {
  if (config_.tasks.empty()) throw ConfigError("model needs at least one task");
  for (const auto& f : config_.id_features) {
    if (!contains(config_.schema_features, f)) {
      throw ConfigError("id feature '" + f + "' is not in schema_features");
    }
    if (f == config_.calibration_feature) {
      throw ConfigError("feature '" + f + "' cannot be both an input and the calibration feature");
    }
  }
  if (!config_.calibration_feature.empty() &&
      !contains(config_.schema_features, config_.calibration_feature)) {
    throw ConfigError("calibration feature '" + config_.calibration_feature +
                      "' is not in schema_features");
  }
  for (const auto& [task, group] : config_.grouping) {
    if (!contains(config_.tasks, task)) throw ConfigError("grouping names unknown task " + task);
  }
  for (const auto& [task, weight] : config_.loss_weights) {
    if (!contains(config_.tasks, task)) throw ConfigError("loss weight for unknown task " + task);
    if (!(weight >= 0.0)) throw ConfigError("loss weight for " + task + " must be >= 0");
  }

  input_dim_ = config_.dense_dim;
  for (const auto& f : config_.id_features) {
    embeddings_.emplace_back(f, make_embedding("embedding/" + f, config_.embedding));
    input_dim_ += config_.embedding.dim;
  }
  if (input_dim_ == 0) throw ConfigError("model input is empty");

  if (config_.interaction != Interaction::kNone) {
    dcn_.emplace("dcn", input_dim_, std::min(config_.rank, input_dim_), config_.layer_count,
                 config_.interaction == Interaction::kResidual, config_.temperature);
  }

  // Towers in order of first appearance among tasks.
  std::vector<std::vector<std::size_t>> members;
  task_slot_.resize(config_.tasks.size());
  for (std::size_t t = 0; t < config_.tasks.size(); ++t) {
    const std::string& task = config_.tasks[t];
    auto it = config_.grouping.find(task);
    const std::string group = it == config_.grouping.end() ? task : it->second;
    auto pos = std::find(tower_names_.begin(), tower_names_.end(), group);
    std::size_t g;
    if (pos == tower_names_.end()) {
      g = tower_names_.size();
      tower_names_.push_back(group);
      members.emplace_back();
    } else {
      g = static_cast<std::size_t>(pos - tower_names_.begin());
    }
    task_slot_[t] = {g, members[g].size()};
    members[g].push_back(t);
  }
  towers_.reserve(tower_names_.size());
  for (std::size_t g = 0; g < tower_names_.size(); ++g) {
    towers_.emplace_back("tower/" + tower_names_[g], input_dim_, config_.hidden,
                         members[g].size(), config_.gating);
  }

  if (config_.isotonic) {
    IsotonicConfig iso = config_.isotonic_config;
    if (config_.calibration_feature.empty()) {
      iso.feature_rows = 0;
    } else if (iso.feature_rows == 0) {
      iso.feature_rows = 16;
    }
    isotonic_.reserve(config_.tasks.size());
    for (const auto& task : config_.tasks) isotonic_.emplace_back("isotonic/" + task, iso);
  }
}

void MultiTaskModel::init(Rng& rng) {
  for (auto& [name, emb] : embeddings_) {
    if (!emb->tables().front()->quantized()) emb->init(config_.embedding.init_scale, rng);
  }
  if (dcn_) dcn_->init(rng);
  for (auto& t : towers_) t.init(rng);
  for (auto& iso : isotonic_) iso.init_identity();
}

std::size_t MultiTaskModel::task_index(const std::string& task) const {
  auto it = std::find(config_.tasks.begin(), config_.tasks.end(), task);
  if (it == config_.tasks.end()) throw SchemaError("unknown task " + task);
  return static_cast<std::size_t>(it - config_.tasks.begin());
}

void MultiTaskModel::validate_example(const TrainingExample& ex) const {
  if (ex.dense.size() != config_.dense_dim) {
    throw SchemaError("example has " + std::to_string(ex.dense.size()) +
                      " dense features, model expects " + std::to_string(config_.dense_dim));
  }
  for (const auto& [name, ids] : ex.ids) {
    if (!contains(config_.schema_features, name)) {
      throw SchemaError("unknown feature name '" + name + "'");
    }
  }
}

std::optional<std::string> MultiTaskModel::calibration_id(const TrainingExample& ex) const {
  if (isotonic_.empty() || !isotonic_.front().has_feature()) return std::nullopt;
  auto it = ex.ids.find(config_.calibration_feature);
  if (it == ex.ids.end() || it->second.empty()) return std::string();
  return it->second.front();
}

std::vector<double> MultiTaskModel::forward(const TrainingExample& ex, Cache& cache) const {
  validate_example(ex);
  cache.input.assign(input_dim_, 0.0);
  std::copy(ex.dense.begin(), ex.dense.end(), cache.input.begin());
  std::size_t offset = config_.dense_dim;
  for (const auto& [name, emb] : embeddings_) {
    std::span<double> slot(cache.input.data() + offset, emb->dim());
    auto it = ex.ids.find(name);
    if (it != ex.ids.end()) {
      for (const auto& id : it->second) emb->lookup_acc(id, slot);
    }
    offset += emb->dim();
  }

  if (dcn_) {
    cache.interaction_out = dcn_->forward(cache.input, cache.dcn);
  } else {
    cache.interaction_out = cache.input;
  }

  cache.towers.resize(towers_.size());
  cache.tower_out.resize(towers_.size());
  for (std::size_t g = 0; g < towers_.size(); ++g) {
    cache.tower_out[g] = towers_[g].forward(cache.interaction_out, cache.towers[g]);
  }

  const std::size_t n = config_.tasks.size();
  cache.raw_logits.resize(n);
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto [g, slot] = task_slot_[t];
    cache.raw_logits[t] = cache.tower_out[g][slot];
    out[t] = cache.raw_logits[t];
  }
  if (!isotonic_.empty()) {
    cache.iso.resize(n);
    const auto calib = calibration_id(ex);
    std::optional<std::string_view> calib_view;
    if (calib) calib_view = *calib;
    for (std::size_t t = 0; t < n; ++t) {
      out[t] = isotonic_[t].forward(cache.raw_logits[t], calib_view, cache.iso[t]);
    }
  }
  return out;
}

std::vector<double> MultiTaskModel::logits(const TrainingExample& ex) const {
  Cache cache;
  return forward(ex, cache);
}

void MultiTaskModel::backward(const TrainingExample& ex, const Cache& cache,
                              std::span<const double> dlogits) {
  const std::size_t n = config_.tasks.size();
  if (dlogits.size() != n) throw DimensionError("backward needs one gradient per task");
  std::vector<Vec> dtower(towers_.size());
  for (std::size_t g = 0; g < towers_.size(); ++g) dtower[g].assign(towers_[g].outputs(), 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double d = dlogits[t];
    if (d == 0.0) continue;
    if (!isotonic_.empty()) d = isotonic_[t].backward(cache.iso[t], d);
    const auto [g, slot] = task_slot_[t];
    dtower[g][slot] += d;
  }

  Vec dinteraction(input_dim_, 0.0);
  Vec dx(input_dim_);
  for (std::size_t g = 0; g < towers_.size(); ++g) {
    if (std::all_of(dtower[g].begin(), dtower[g].end(), [](double v) { return v == 0.0; })) {
      continue;
    }
    towers_[g].backward(cache.towers[g], dtower[g], dx);
    kernels::axpy(1.0, dx, dinteraction);
  }

  Vec dinput(input_dim_);
  if (dcn_) {
    dcn_->backward(cache.dcn, dinteraction, dinput);
  } else {
    dinput = dinteraction;
  }

  std::size_t offset = config_.dense_dim;
  for (auto& [name, emb] : embeddings_) {
    std::span<const double> slot(dinput.data() + offset, emb->dim());
    auto it = ex.ids.find(name);
    if (it != ex.ids.end() && !emb->tables().front()->quantized()) {
      for (const auto& id : it->second) emb->backward(id, slot);
    }
    offset += emb->dim();
  }
}

Vec MultiTaskModel::representation(const TrainingExample& ex, const std::string& task) const {
  Cache cache;
  forward(ex, cache);
  return cache.towers[task_slot_[task_index(task)].first].penultimate;
}

std::size_t MultiTaskModel::representation_dim(const std::string& task) const {
  return towers_[task_slot_[task_index(task)].first].penultimate_dim();
}

ParameterList MultiTaskModel::parameters() {
  ParameterList out;
  for (auto& [name, emb] : embeddings_) {
    for (EmbeddingTable* t : emb->tables()) {
      if (!t->quantized()) out.push_back(&t->param);
    }
  }
  if (dcn_) dcn_->collect(out);
  for (auto& t : towers_) t.collect(out);
  for (auto& iso : isotonic_) iso.collect(out);
  return out;
}

std::vector<EmbeddingTable*> MultiTaskModel::embedding_tables() {
  std::vector<EmbeddingTable*> out;
  for (auto& [name, emb] : embeddings_) {
    for (EmbeddingTable* t : emb->tables()) out.push_back(t);
  }
  return out;
}

std::vector<const EmbeddingTable*> MultiTaskModel::embedding_tables() const {
  std::vector<const EmbeddingTable*> out;
  for (const auto& [name, emb] : embeddings_) {
    const IdEmbedding& e = *emb;
    for (const EmbeddingTable* t : e.tables()) out.push_back(t);
  }
  return out;
}

bool MultiTaskModel::embeddings_quantized() const {
  const auto tables = embedding_tables();
  return !tables.empty() &&
         std::all_of(tables.begin(), tables.end(), [](const auto* t) { return t->quantized(); });
}

void MultiTaskModel::quantize_embeddings() {
  for (EmbeddingTable* t : embedding_tables()) t->quantize();
}

IdEmbedding& MultiTaskModel::embedding(const std::string& feature) {
  for (auto& [name, emb] : embeddings_) {
    if (name == feature) return *emb;
  }
  throw SchemaError("model has no embedding for feature " + feature);
}

ModelSummary MultiTaskModel::summary() const {
  ModelSummary s;
  for (const auto& [name, emb] : embeddings_) {
    s.entries.push_back({"embedding/" + name, emb->parameter_count()});
  }
  if (dcn_) s.entries.push_back({"dcn", dcn_->parameter_count()});
  for (std::size_t g = 0; g < towers_.size(); ++g) {
    s.entries.push_back({"tower/" + tower_names_[g], towers_[g].parameter_count()});
  }
  for (std::size_t t = 0; t < isotonic_.size(); ++t) {
    s.entries.push_back({"isotonic/" + config_.tasks[t], isotonic_[t].parameter_count()});
  }
  for (const auto& e : s.entries) s.total += e.parameters;
  return s;
}

double bce_with_logit(double logit, double label) {
  // log(1 + exp(z)) - y z
  return softplus(logit) - label * logit;
}

namespace {

std::vector<std::size_t> labelled_counts(const MultiTaskModel& model,
                                         std::span<const TrainingExample* const> batch) {
  const auto& tasks = model.config().tasks;
  std::vector<std::size_t> counts(tasks.size(), 0);
  for (const TrainingExample* ex : batch) {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      if (ex->labels.count(tasks[t])) ++counts[t];
    }
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (counts[t] == 0 && !batch.empty()) {
      log::warn_once("masked/" + tasks[t],
                     "task '" + tasks[t] + "' has no labels in a batch; it contributes 0");
    }
  }
  return counts;
}

double task_weight(const ModelConfig& cfg, const std::string& task) {
  auto it = cfg.loss_weights.find(task);
  return it == cfg.loss_weights.end() ? 1.0 : it->second;
}

// Gradients are accumulated into grad_target when it is non-null.
double loss_impl(const MultiTaskModel& model, std::span<const TrainingExample* const> batch,
                 MultiTaskModel* grad_target) {
  const auto& cfg = model.config();
  const std::size_t n = cfg.tasks.size();
  const auto counts = labelled_counts(model, batch);
  std::vector<double> weights(n);
  for (std::size_t t = 0; t < n; ++t) {
    weights[t] = counts[t] ? task_weight(cfg, cfg.tasks[t]) / static_cast<double>(counts[t]) : 0.0;
  }
  double total = 0.0;
  MultiTaskModel::Cache cache;
  std::vector<double> dlogits(n);
  for (const TrainingExample* ex : batch) {
    const auto z = model.forward(*ex, cache);
    bool any = false;
    for (std::size_t t = 0; t < n; ++t) {
      dlogits[t] = 0.0;
      auto label = ex->label(cfg.tasks[t]);
      if (!label) continue;
      const double y = static_cast<double>(*label);
      total += weights[t] * bce_with_logit(z[t], y);
      dlogits[t] = weights[t] * (sigmoid(z[t]) - y);
      any = true;
    }
    if (grad_target && any) grad_target->backward(*ex, cache, dlogits);
  }
  return total;
}

}  // namespace

double multitask_loss(const MultiTaskModel& model, std::span<const TrainingExample> batch) {
  std::vector<const TrainingExample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& ex : batch) ptrs.push_back(&ex);
  return loss_impl(model, ptrs, nullptr);
}

double multitask_loss_and_grad(MultiTaskModel& model,
                               std::span<const TrainingExample* const> batch) {
  return loss_impl(model, batch, &model);
}

std::map<std::string, double> multitask_forward(const MultiTaskModel& model,
                                                const TrainingExample& ex) {
  const auto z = model.logits(ex);
  std::map<std::string, double> out;
  for (std::size_t t = 0; t < z.size(); ++t) out[model.config().tasks[t]] = z[t];
  return out;
}

}  // namespace rankkit
