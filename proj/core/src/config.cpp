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

#include "rankkit/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "rankkit/error.hpp"

namespace rankkit {

using nlohmann::json;

namespace {

template <typename E>
using EnumTable = std::vector<std::pair<E, const char*>>;

const EnumTable<Interaction> kInteraction = {
    {Interaction::kNone, "none"}, {Interaction::kLowRank, "lowrank"}, {Interaction::kResidual, "residual"}};
const EnumTable<EmbeddingKind> kEmbeddingKind = {{EmbeddingKind::kQr, "qr"},
                                                 {EmbeddingKind::kDenseHash, "dense"}};
const EnumTable<SplitMode> kSplit = {{SplitMode::kSingle32, "single32"}, {SplitMode::kDual32, "dual32"}};
const EnumTable<Aggregation> kAggregation = {{Aggregation::kSum, "sum"},
                                             {Aggregation::kMultiply, "multiply"}};
const EnumTable<OptimizerKind> kOptimizer = {{OptimizerKind::kAdam, "adam"},
                                             {OptimizerKind::kAdagrad, "adagrad"}};
const EnumTable<LrDecay> kDecay = {{LrDecay::kNone, "none"}, {LrDecay::kLinear, "linear"}};

template <typename E>
const char* enum_name(const EnumTable<E>& table, E value) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  return "?";
}

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }
  ~Section() = default;

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(child(key) + ": " + e.what());
    }
  }

  template <typename T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(child(key) + ": " + e.what());
    }
  }

  template <typename E>
  void get_enum(const char* key, const EnumTable<E>& table, E& out) {
    std::optional<std::string> name;
    get_optional(key, name);
    if (!name) return;
    for (const auto& [e, n] : table) {
      if (*name == n) {
        out = e;
        return;
      }
    }
    std::string allowed;
    for (const auto& [e, n] : table) allowed += std::string(allowed.empty() ? "" : ", ") + n;
    throw ConfigError(child(key) + ": unknown value '" + *name + "' (allowed: " + allowed + ")");
  }

  std::optional<Section> sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return Section(*it, child(key));
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + child(key) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_embedding(Section s, EmbeddingConfig& e, bool* quantize) {
  s.get_enum("kind", kEmbeddingKind, e.kind);
  s.get("quotient_size", e.quotient_size);
  s.get("remainder_size", e.remainder_size);
  s.get("dense_rows", e.dense_rows);
  s.get("dim", e.dim);
  s.get_enum("split_mode", kSplit, e.split);
  s.get_enum("aggregation", kAggregation, e.aggregation);
  s.get("init_scale", e.init_scale);
  if (quantize) s.get("quantize", *quantize);
  s.finish();
}

void read_model(Section s, ModelConfig& m, bool* quantize) {
  s.get("dense_dim", m.dense_dim);
  s.get("schema_features", m.schema_features);
  s.get("id_features", m.id_features);
  if (auto e = s.sub("embedding")) read_embedding(std::move(*e), m.embedding, quantize);
  s.get_enum("interaction", kInteraction, m.interaction);
  s.get("rank", m.rank);
  s.get("layer_count", m.layer_count);
  s.get("temperature", m.temperature);
  s.get("hidden", m.hidden);
  s.get("gating", m.gating);
  s.get("tasks", m.tasks);
  s.get("grouping", m.grouping);
  s.get("loss_weights", m.loss_weights);
  s.get("isotonic", m.isotonic);
  s.get("isotonic_step", m.isotonic_config.step);
  s.get("isotonic_buckets", m.isotonic_config.bucket_count);
  s.get("isotonic_y_min", m.isotonic_config.y_min);
  s.get("isotonic_feature_rows", m.isotonic_config.feature_rows);
  s.get("calibration_feature", m.calibration_feature);
  s.finish();
}

json embedding_json(const EmbeddingConfig& e) {
  return {{"kind", enum_name(kEmbeddingKind, e.kind)},
          {"quotient_size", e.quotient_size},
          {"remainder_size", e.remainder_size},
          {"dense_rows", e.dense_rows},
          {"dim", e.dim},
          {"split_mode", enum_name(kSplit, e.split)},
          {"aggregation", enum_name(kAggregation, e.aggregation)},
          {"init_scale", e.init_scale}};
}

json model_json(const ModelConfig& m) {
  return {{"dense_dim", m.dense_dim},
          {"schema_features", m.schema_features},
          {"id_features", m.id_features},
          {"embedding", embedding_json(m.embedding)},
          {"interaction", enum_name(kInteraction, m.interaction)},
          {"rank", m.rank},
          {"layer_count", m.layer_count},
          {"temperature", m.temperature},
          {"hidden", m.hidden},
          {"gating", m.gating},
          {"tasks", m.tasks},
          {"grouping", m.grouping},
          {"loss_weights", m.loss_weights},
          {"isotonic", m.isotonic},
          {"isotonic_step", m.isotonic_config.step},
          {"isotonic_buckets", m.isotonic_config.bucket_count},
          {"isotonic_y_min", m.isotonic_config.y_min},
          {"isotonic_feature_rows", m.isotonic_config.feature_rows},
          {"calibration_feature", m.calibration_feature}};
}

json parse_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

}  // namespace

ExperimentConfig::ExperimentConfig() { model.id_features = {"member", "item"}; }

void ExperimentConfig::validate() const {
  world.validate();
  optimizer.validate();
  incremental.validate();
  if (model.dense_dim != world.dense_dim) {
    throw ConfigError("model.dense_dim (" + std::to_string(model.dense_dim) +
                      ") must equal world.dense_dim (" + std::to_string(world.dense_dim) + ")");
  }
  for (const auto& task : model.tasks) {
    if (std::find(world.tasks.begin(), world.tasks.end(), task) == world.tasks.end()) {
      throw ConfigError("model task '" + task + "' is not produced by the world");
    }
  }
  if (std::find(model.tasks.begin(), model.tasks.end(), headline_task) == model.tasks.end()) {
    throw ConfigError("headline_task '" + headline_task + "' is not a model task");
  }
  if (model.embedding.aggregation == Aggregation::kMultiply) {
    throw ConfigError(
        "embedding.aggregation=multiply is not supported: QR rows are combined by summation");
  }
  if (model.rank == 0 || model.layer_count == 0) throw ConfigError("rank and layer_count must be > 0");
  if (model.rank > model.dense_dim + model.id_features.size() * model.embedding.dim) {
    throw ConfigError("model.rank must not exceed the interaction input width");
  }
  if (data.windows == 0) throw ConfigError("data.windows must be positive");
  if (data.rows_per_window == 0) throw ConfigError("data.rows_per_window must be positive");
  if (data.replay.top_n < 2) throw ConfigError("data.replay.top_n must be >= 2");
  if (data.replay.candidates < data.replay.top_n) {
    throw ConfigError("data.replay.candidates must be >= top_n");
  }
  if (!(bandit.prior_scale > 0.0) || !(bandit.noise_variance > 0.0)) {
    throw ConfigError("bandit.prior_scale and bandit.noise_variance must be > 0");
  }
  if (bandit.candidates == 0 || bandit.update_every == 0) {
    throw ConfigError("bandit.candidates and bandit.update_every must be > 0");
  }
  if (!(bandit.reward_noise >= 0.0)) throw ConfigError("bandit.reward_noise must be >= 0");
}

ExperimentConfig parse_config(std::string_view json_text) {
  const json root = parse_text(json_text);
  ExperimentConfig c;
  Section s(root, "");
  s.get("seed", c.seed);
  s.get_optional("world_seed", c.world_seed);
  s.get("quantize", c.quantize);
  s.get("headline_task", c.headline_task);

  if (auto w = s.sub("world")) {
    auto& wc = c.world;
    w->get("dense_dim", wc.dense_dim);
    w->get("member_vocab", wc.member_vocab);
    w->get("item_vocab", wc.item_vocab);
    w->get("device_count", wc.device_count);
    w->get("zipf_exponent", wc.zipf_exponent);
    w->get("latent_dim", wc.latent_dim);
    w->get("dense_weight_scale", wc.dense_weight_scale);
    w->get("latent_scale", wc.latent_scale);
    w->get("id_bias_scale", wc.id_bias_scale);
    w->get("cross_pairs", wc.cross_pairs);
    w->get("cross_strength", wc.cross_strength);
    w->get("drift_scale", wc.drift_scale);
    w->get("device_scales", wc.device_scales);
    w->get("tasks", wc.tasks);
    w->get("task_scales", wc.task_scales);
    w->get("task_rates", wc.task_rates);
    w->get("task_offsets", wc.task_offsets);
    w->get("impressions_per_session", wc.impressions_per_session);
    w->get("window_seconds", wc.window_seconds);
    w->get("max_windows", wc.max_windows);
    w->finish();
  }
  c.model.dense_dim = c.world.dense_dim;

  if (auto d = s.sub("data")) {
    d->get("rows_per_window", c.data.rows_per_window);
    d->get("test_rows", c.data.test_rows);
    d->get("windows", c.data.windows);
    d->get("train", c.data.train_path);
    d->get("test", c.data.test_path);
    d->get("replay_log", c.data.replay_log);
    if (auto r = d->sub("replay")) {
      r->get("sessions", c.data.replay.sessions);
      r->get("candidates", c.data.replay.candidates);
      r->get("top_n", c.data.replay.top_n);
      r->get("examination_decay", c.data.replay.examination_decay);
      r->finish();
    }
    d->finish();
  }

  if (auto m = s.sub("model")) read_model(std::move(*m), c.model, &c.quantize);

  if (auto o = s.sub("optimizer")) {
    auto& oc = c.optimizer;
    o->get_enum("kind", kOptimizer, oc.kind);
    o->get("peak_learning_rate", oc.peak_learning_rate);
    o->get("beta1", oc.beta1);
    o->get("beta2", oc.beta2);
    o->get("adam_epsilon", oc.adam_epsilon);
    o->get("adagrad_epsilon", oc.adagrad_epsilon);
    o->get("total_steps", oc.total_steps);
    o->get("warmup_fraction", oc.warmup_fraction);
    o->get("clip_global_norm", oc.clip_global_norm);
    o->get("batch_size", oc.batch_size);
    o->get("epochs", oc.epochs);
    o->get_enum("decay", kDecay, oc.decay);
    o->finish();
  }

  if (auto i = s.sub("incremental")) {
    i->get("forgetting", c.incremental.forgetting);
    i->get("cold_weight", c.incremental.cold_weight);
    i->get("epochs", c.incremental.epochs);
    i->get("fisher_cap", c.incremental.fisher_cap);
    i->finish();
  }

  if (auto b = s.sub("bandit")) {
    auto& bc = c.bandit;
    b->get("prior_scale", bc.prior_scale);
    b->get("noise_variance", bc.noise_variance);
    b->get("buffer_capacity", bc.buffer_capacity);
    b->get("candidates", bc.candidates);
    b->get("update_every", bc.update_every);
    b->get("task", bc.task);
    b->get("arm_means", bc.arm_means);
    b->get("reward_noise", bc.reward_noise);
    b->get("forced_pulls", bc.forced_pulls);
    b->finish();
  }

  s.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["world_seed"] = c.world_seed ? json(*c.world_seed) : json(nullptr);
  j["quantize"] = c.quantize;
  j["headline_task"] = c.headline_task;
  const auto& w = c.world;
  j["world"] = {{"dense_dim", w.dense_dim},
                {"member_vocab", w.member_vocab},
                {"item_vocab", w.item_vocab},
                {"device_count", w.device_count},
                {"zipf_exponent", w.zipf_exponent},
                {"latent_dim", w.latent_dim},
                {"dense_weight_scale", w.dense_weight_scale},
                {"latent_scale", w.latent_scale},
                {"id_bias_scale", w.id_bias_scale},
                {"cross_pairs", w.cross_pairs},
                {"cross_strength", w.cross_strength},
                {"drift_scale", w.drift_scale},
                {"device_scales", w.device_scales},
                {"tasks", w.tasks},
                {"task_scales", w.task_scales},
                {"task_rates", w.task_rates},
                {"task_offsets", w.task_offsets},
                {"impressions_per_session", w.impressions_per_session},
                {"window_seconds", w.window_seconds},
                {"max_windows", w.max_windows}};
  j["data"] = {{"rows_per_window", c.data.rows_per_window},
               {"test_rows", c.data.test_rows},
               {"windows", c.data.windows},
               {"train", c.data.train_path},
               {"test", c.data.test_path},
               {"replay_log", c.data.replay_log},
               {"replay",
                {{"sessions", c.data.replay.sessions},
                 {"candidates", c.data.replay.candidates},
                 {"top_n", c.data.replay.top_n},
                 {"examination_decay", c.data.replay.examination_decay}}}};
  j["model"] = model_json(c.model);
  j["model"]["embedding"]["quantize"] = c.quantize;
  j.erase("quantize");
  const auto& o = c.optimizer;
  j["optimizer"] = {{"kind", enum_name(kOptimizer, o.kind)},
                    {"peak_learning_rate", o.peak_learning_rate},
                    {"beta1", o.beta1},
                    {"beta2", o.beta2},
                    {"adam_epsilon", o.adam_epsilon},
                    {"adagrad_epsilon", o.adagrad_epsilon},
                    {"total_steps", o.total_steps},
                    {"warmup_fraction", o.warmup_fraction},
                    {"clip_global_norm", o.clip_global_norm},
                    {"batch_size", o.batch_size},
                    {"epochs", o.epochs},
                    {"decay", enum_name(kDecay, o.decay)}};
  j["incremental"] = {{"forgetting", c.incremental.forgetting},
                      {"cold_weight", c.incremental.cold_weight},
                      {"epochs", c.incremental.epochs},
                      {"fisher_cap", c.incremental.fisher_cap}};
  const auto& b = c.bandit;
  j["bandit"] = {{"prior_scale", b.prior_scale},
                 {"noise_variance", b.noise_variance},
                 {"buffer_capacity", b.buffer_capacity},
                 {"candidates", b.candidates},
                 {"update_every", b.update_every},
                 {"task", b.task},
                 {"arm_means", b.arm_means},
                 {"reward_noise", b.reward_noise},
                 {"forced_pulls", b.forced_pulls}};
  return j.dump(2) + "\n";
}

std::string model_config_to_json(const ModelConfig& config) { return model_json(config).dump(); }

ModelConfig parse_model_config(std::string_view json_text) {
  const json root = parse_text(json_text);
  ModelConfig m;
  m.id_features.clear();
  read_model(Section(root, "model"), m, nullptr);
  return m;
}

}  // namespace rankkit
