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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rankkit/datagen.hpp"
#include "rankkit/model.hpp"
#include "rankkit/training.hpp"

namespace rankkit {

struct DataConfig {
  std::size_t rows_per_window = 20000;
  std::size_t test_rows = 10000;
  std::size_t windows = 7;
  ReplayConfig replay;
  std::string train_path;
  std::string test_path;
  std::string replay_log;
};

struct BanditConfig {
  double prior_scale = 1.0;
  double noise_variance = 1.0;
  std::size_t buffer_capacity = 100000;
  std::size_t candidates = 10;
  // Rounds between posterior refreshes.
  std::size_t update_every = 1;
  std::string task = "click";
  // Non-empty: a plain Gaussian bandit with these arm means and one-hot
  // features, instead of the checkpoint-backed neural-linear world.
  std::vector<double> arm_means;
  double reward_noise = 1.0;
  // Round-robin pulls (in total, not per arm) before greedy exploits.
  std::size_t forced_pulls = 10;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  // Seed of the world's ground truth; defaults to seed.
  std::optional<std::uint64_t> world_seed;
  WorldConfig world;
  DataConfig data;
  ModelConfig model;
  bool quantize = false;
  std::string headline_task = "click";
  OptimizerConfig optimizer;
  IncrementalConfig incremental;
  BanditConfig bandit;

  ExperimentConfig();

  std::uint64_t effective_world_seed() const { return world_seed.value_or(seed); }
  /// Throws ConfigError naming the violated constraint.
  void validate() const;
};

/// Parses a JSON config. Every key is optional; unknown keys anywhere are a
/// ConfigError naming their path.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config_file(const std::string& path);
/// Canonical JSON with every field, sorted keys. parse_config(to_json(c))
/// reproduces c.
std::string config_to_json(const ExperimentConfig& config);

/// Model configuration only, as stored in checkpoints.
std::string model_config_to_json(const ModelConfig& config);
ModelConfig parse_model_config(std::string_view json_text);

}  // namespace rankkit
