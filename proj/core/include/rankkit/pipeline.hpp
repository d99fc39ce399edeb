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

// End-to-end experiment pipelines behind the command-line tool.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rankkit/checkpoint.hpp"
#include "rankkit/config.hpp"
#include "rankkit/datagen.hpp"
#include "rankkit/eval.hpp"

namespace rankkit {

WorldModel make_world(const ExperimentConfig& config);

/// Rows of one window. stream "train" and "test" are disjoint draws from the
/// same window of the same world.
Dataset window_data(const ExperimentConfig& config, const WorldModel& world, std::size_t window,
                    const std::string& stream, std::size_t rows);

/// Writes <out_dir>/window_XX.jsonl for windows [0, windows). Returns paths.
std::vector<std::string> gen_data(const ExperimentConfig& config, const std::string& out_dir,
                                  std::size_t windows, const std::string& stream = "train");

// ---------------------------------------------------------------------------

struct TrainResult {
  Checkpoint checkpoint;
  TrainReport report;
};

/// Cold start when from is null. Otherwise an incremental cycle: weights
/// start at alpha * cold + (1 - alpha) * from, and the Fisher-weighted
/// penalty anchors them to both snapshots, which must carry Fisher
/// diagonals. The result always includes the Fisher diagonal on data.
TrainResult run_train(const ExperimentConfig& config, const Dataset& data,
                      const Checkpoint* from = nullptr, const Checkpoint* cold = nullptr,
                      std::function<void(std::size_t epoch, double mean_loss)> on_epoch = {});

/// Seed of the pseudo-random serving ranker derived from an experiment seed.
std::uint64_t randomizer_seed(std::uint64_t seed);

/// Metrics of a checkpoint on data; replay rate when sessions are given.
/// With randomizer set, the replay scorer reproduces the pseudo-random
/// ranker (top_n, seed) built on the checkpoint's headline score.
struct EvalOptions {
  std::string headline_task = "click";
  const std::vector<ReplaySession>* replay = nullptr;
  bool randomizer = false;
  std::size_t top_n = 5;
  std::uint64_t randomizer_seed = 0;
};
MetricsReport run_eval(const Checkpoint& checkpoint, const Dataset& data, const EvalOptions& options);

/// Item scorer (probability of a task) backed by a checkpointed model.
PseudoRandomRanker::ItemScorer model_scorer(std::shared_ptr<const MultiTaskModel> model,
                                            const std::string& task);

struct QuantizeResult {
  Checkpoint checkpoint;
  std::size_t bytes_before = 0;
  std::size_t bytes_after = 0;
};
/// Replaces every full-precision embedding table by its int8 form. Raises
/// InputError when the input is already quantized.
QuantizeResult run_quantize(const Checkpoint& checkpoint);

// ---------------------------------------------------------------------------
// Bandit simulation

struct BanditCurves {
  // policy -> per-seed cumulative regret after every round
  std::map<std::string, std::vector<std::vector<double>>> cumulative;
  std::vector<std::uint64_t> seeds;

  double mean_final(const std::string& policy) const;
  /// policy,seed,round,cumulative_regret; seed "mean" rows hold the average.
  std::string to_csv() const;
};

/// Gaussian multi-armed bandit with one-hot features (bandit.arm_means).
BanditCurves simulate_gaussian_bandit(const BanditConfig& config, std::size_t rounds,
                                      const std::vector<std::uint64_t>& seeds);

/// Neural-linear bandit on the synthetic world: candidates are items for a
/// sampled member, features are the checkpoint's last-layer representation,
/// rewards are Bernoulli draws of the ground-truth task probability.
BanditCurves simulate_neural_bandit(const ExperimentConfig& config, const Checkpoint& checkpoint,
                                    std::size_t rounds, const std::vector<std::uint64_t>& seeds);

// ---------------------------------------------------------------------------
// Ablation

inline const std::vector<std::string> kAblationVariants = {
    "mlp-baseline", "+ids",         "+isotonic",    "+large-mlp",   "+gating",
    "+grouping",    "+lowrank-dcn", "+residual-dcn", "+quantization"};

/// Applies one variant on top of config (cumulative stacking). Unknown names
/// raise ConfigError.
void apply_variant(ExperimentConfig& config, const std::string& variant);

struct AblationRow {
  std::string variant;
  std::vector<double> auc;    // per seed
  std::vector<double> delta;  // per seed, vs the first row
  std::vector<double> oe;     // per seed (NaN when undefined)

  double mean_auc() const;
  double mean_delta() const;
  double sd_delta() const;
  double sd_auc() const;
};

struct AblationTable {
  std::vector<std::uint64_t> seeds;
  std::vector<AblationRow> rows;
  std::string to_markdown() const;
  std::string to_csv() const;
};

/// Trains every variant on the same per-seed data (window 0 train stream,
/// held-out test stream) unless explicit datasets are given.
AblationTable run_ablation(const ExperimentConfig& config, const std::vector<std::string>& variants,
                           const std::vector<std::uint64_t>& seeds,
                           const Dataset* train = nullptr, const Dataset* test = nullptr);

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count);

}  // namespace rankkit
