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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rankkit/calibration.hpp"
#include "rankkit/embeddings.hpp"
#include "rankkit/example.hpp"
#include "rankkit/layers.hpp"

namespace rankkit {

enum class Interaction { kNone, kLowRank, kResidual };
enum class EmbeddingKind { kQr, kDenseHash };

struct EmbeddingConfig {
  EmbeddingKind kind = EmbeddingKind::kQr;
  std::size_t quotient_size = 200;
  std::size_t remainder_size = 200;
  std::size_t dense_rows = 40000;  // kDenseHash only
  std::size_t dim = 8;
  SplitMode split = SplitMode::kSingle32;
  Aggregation aggregation = Aggregation::kSum;
  double init_scale = 0.05;
};

struct ModelConfig {
  std::size_t dense_dim = 8;
  // Every id feature an example may carry. Anything else is a schema error.
  std::vector<std::string> schema_features = {"member", "item", "device"};
  // Subset of schema_features embedded and fed to the network.
  std::vector<std::string> id_features;
  EmbeddingConfig embedding;

  Interaction interaction = Interaction::kNone;
  std::size_t rank = 4;
  std::size_t layer_count = 2;
  double temperature = 1.0;

  std::vector<std::size_t> hidden = {32, 16};
  bool gating = false;

  std::vector<std::string> tasks = {"click", "like", "comment"};
  // task -> tower name. Empty means one tower per task.
  std::map<std::string, std::string> grouping;
  // Missing entries weigh 1.
  std::map<std::string, double> loss_weights;

  bool isotonic = false;
  IsotonicConfig isotonic_config;
  // Categorical feature feeding the isotonic embedding; empty for none.
  std::string calibration_feature;
};

struct SummaryEntry {
  std::string component;
  std::size_t parameters = 0;
};

struct ModelSummary {
  std::vector<SummaryEntry> entries;
  std::size_t total = 0;
};

/// Multi-task ranking model: dense features and summed id-embedding bags are
/// concatenated, passed through the cross-network block, then per-group MLP
/// towers emit one logit per task, optionally calibrated by an isotonic layer.
class MultiTaskModel {
 public:
  explicit MultiTaskModel(ModelConfig config);
  MultiTaskModel(MultiTaskModel&&) = default;
  MultiTaskModel& operator=(MultiTaskModel&&) = default;

  struct Cache {
    Vec input;
    ResidualDcnBlock::Cache dcn;
    Vec interaction_out;
    std::vector<MlpTower::Cache> towers;
    std::vector<Vec> tower_out;
    std::vector<double> raw_logits;
    std::vector<IsotonicLayer::Cache> iso;
  };

  void init(Rng& rng);

  const ModelConfig& config() const { return config_; }
  std::size_t task_count() const { return config_.tasks.size(); }
  std::size_t task_index(const std::string& task) const;
  std::size_t input_dim() const { return input_dim_; }

  /// Final (post-calibration) logits, in config().tasks order.
  std::vector<double> forward(const TrainingExample& ex, Cache& cache) const;
  std::vector<double> logits(const TrainingExample& ex) const;
  void backward(const TrainingExample& ex, const Cache& cache, std::span<const double> dlogits);

  /// Input of the output layer of the tower hosting task (the representation
  /// a neural-linear bandit regresses on).
  Vec representation(const TrainingExample& ex, const std::string& task) const;
  std::size_t representation_dim(const std::string& task) const;

  /// Trainable parameters in registration order. Quantized tables are frozen
  /// and excluded.
  ParameterList parameters();
  /// Every parameter including frozen ones (for checkpointing).
  std::vector<EmbeddingTable*> embedding_tables();
  std::vector<const EmbeddingTable*> embedding_tables() const;
  bool embeddings_quantized() const;
  void quantize_embeddings();

  ModelSummary summary() const;

  std::optional<ResidualDcnBlock>& dcn() { return dcn_; }
  std::vector<MlpTower>& towers() { return towers_; }
  std::vector<IsotonicLayer>& isotonic() { return isotonic_; }
  const std::vector<std::string>& tower_names() const { return tower_names_; }
  IdEmbedding& embedding(const std::string& feature);

 private:
  void validate_example(const TrainingExample& ex) const;
  std::optional<std::string> calibration_id(const TrainingExample& ex) const;

  ModelConfig config_;
  std::size_t input_dim_ = 0;
  std::vector<std::pair<std::string, std::unique_ptr<IdEmbedding>>> embeddings_;
  std::optional<ResidualDcnBlock> dcn_;
  std::vector<std::string> tower_names_;
  std::vector<MlpTower> towers_;
  // task index -> (tower index, output slot)
  std::vector<std::pair<std::size_t, std::size_t>> task_slot_;
  std::vector<IsotonicLayer> isotonic_;
};

std::unique_ptr<IdEmbedding> make_embedding(const std::string& name, const EmbeddingConfig& cfg);

/// Numerically stable binary cross-entropy on a logit.
double bce_with_logit(double logit, double label);

/// sum_task weight_task * mean BCE over examples carrying that task's label.
/// A task with no labels in the batch contributes 0.
double multitask_loss(const MultiTaskModel& model, std::span<const TrainingExample> batch);

/// Same loss over a batch of pointers; accumulates its gradient into the
/// model's parameters (callers zero gradients first).
double multitask_loss_and_grad(MultiTaskModel& model,
                               std::span<const TrainingExample* const> batch);

/// Map form of the forward pass: task -> final logit.
std::map<std::string, double> multitask_forward(const MultiTaskModel& model,
                                                const TrainingExample& ex);

}  // namespace rankkit
