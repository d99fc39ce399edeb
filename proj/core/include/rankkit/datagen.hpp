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
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rankkit/eval.hpp"
#include "rankkit/example.hpp"
#include "rankkit/rng.hpp"

namespace rankkit {

// Synthetic click world.
//
// Every impression pairs a member with an item, shown on a device. The shared
// score is
//
//   s = w . dense + <m_member, v_item> + sum_k c_k dense_a(k) dense_b(k)
//       + bias_member + bias_item + drift_item(window)
//
// and task t sees logit_t = offset_t + device_scale[device] * task_scale_t * s.
// Offsets are solved at construction so each task's marginal positive rate
// matches task_rates. The device never enters the score directly, so a model
// that only sees the device as a calibration feature can still profit from it.

struct WorldConfig {
  std::size_t dense_dim = 8;
  std::size_t member_vocab = 1000;
  std::size_t item_vocab = 1000;
  std::size_t device_count = 4;
  double zipf_exponent = 1.2;
  std::size_t latent_dim = 4;

  double dense_weight_scale = 0.4;
  double latent_scale = 0.6;
  double id_bias_scale = 0.6;
  // Number of (a, b) dense pairs in the multiplicative cross term and the
  // magnitude of each coefficient. 0 pairs disables the term.
  std::size_t cross_pairs = 4;
  double cross_strength = 0.8;
  // Std-dev of the per-window random-walk step on every item bias.
  double drift_scale = 0.2;
  std::vector<double> device_scales = {1.0, 0.5, 1.6, 0.8};

  std::vector<std::string> tasks = {"click", "like", "comment"};
  std::vector<double> task_scales = {1.0, 0.8, 0.6};
  // Target marginal positive rates. When empty, task_offsets is used as is
  // (all 0 if that is empty too).
  std::vector<double> task_rates = {0.10, 0.04, 0.01};
  std::vector<double> task_offsets;

  std::size_t impressions_per_session = 10;
  std::int64_t window_seconds = 86400;
  // Windows with materialized drift; later windows reuse the last one.
  std::size_t max_windows = 16;

  void validate() const;
  /// Every effect zero: each task has probability exactly 0.5.
  static WorldConfig zero();
};

class WorldModel {
 public:
  WorldModel(WorldConfig config, std::uint64_t seed);

  const WorldConfig& config() const { return config_; }

  /// Ground-truth probability for one task of an example produced by this
  /// world (ids "m<k>", "i<k>", "d<k>").
  double probability(const TrainingExample& ex, std::size_t task, std::size_t window) const;
  /// Shared score s for an example (before device/task scaling).
  double score(const TrainingExample& ex, std::size_t window) const;
  double task_offset(std::size_t task) const { return offsets_[task]; }

  /// Adds delta to one item's bias from the given window onward.
  void add_item_drift(std::size_t item, std::size_t from_window, double delta);
  double item_bias(std::size_t item, std::size_t window) const;

  std::size_t sample_member(Rng& rng) const;
  std::size_t sample_item(Rng& rng) const;

  /// An example with dense features and ids filled, no labels.
  TrainingExample make_example(std::size_t member, std::size_t item, std::size_t device,
                               Rng& rng) const;

 private:
  double raw_score(const std::vector<double>& dense, std::size_t member, std::size_t item,
                   std::size_t window) const;
  void solve_offsets(std::uint64_t seed);

  WorldConfig config_;
  std::vector<double> dense_weights_;
  std::vector<std::vector<double>> member_latent_;
  std::vector<std::vector<double>> item_latent_;
  std::vector<double> member_bias_;
  // [window][item]
  std::vector<std::vector<double>> item_bias_;
  std::vector<std::pair<std::size_t, std::size_t>> cross_index_;
  std::vector<double> cross_coef_;
  std::vector<double> offsets_;
  std::vector<double> member_cdf_;
  std::vector<double> item_cdf_;
};

std::string member_id(std::size_t k);
std::string item_id(std::size_t k);
std::string device_id(std::size_t k);

/// n labelled examples from one time window. Example i draws from its own
/// stream derived from (rng seed, window, i), so output is independent of
/// evaluation order.
Dataset generate(const WorldModel& world, std::size_t n, std::size_t window, const Rng& rng);

/// Produces a served order for one session: candidates scored by a base
/// model, the top_n positions shuffled uniformly with a stream keyed by
/// (seed, session id). The same object replays its own decisions exactly.
class PseudoRandomRanker {
 public:
  using ItemScorer = std::function<double(const TrainingExample&)>;

  PseudoRandomRanker(ItemScorer base, std::size_t top_n, std::uint64_t seed);

  std::vector<std::string> order(const std::string& session_id,
                                 const std::map<std::string, TrainingExample>& candidates) const;
  /// Scores that reproduce order() for a logged session.
  SessionScorer as_scorer() const;

 private:
  ItemScorer base_;
  std::size_t top_n_;
  std::uint64_t seed_;
};

struct ReplayConfig {
  std::size_t sessions = 1000;
  std::size_t candidates = 10;
  std::size_t top_n = 5;
  std::size_t window = 0;
  // Contribution probability at position p is p_any / p^examination_decay.
  double examination_decay = 1.0;
};

/// Probability that a member contributes (likes or comments) on an item
/// shown at position 1: 1 - (1 - p_like)(1 - p_comment).
double contribution_probability(const WorldModel& world, const TrainingExample& ex,
                                std::size_t window);

std::vector<ReplaySession> generate_replay_log(const WorldModel& world,
                                               const PseudoRandomRanker& ranker,
                                               const ReplayConfig& config, const Rng& rng);

// JSON Lines I/O. Readers raise DataError naming the offending line.
void write_example_jsonl(std::ostream& os, const TrainingExample& ex);
void write_jsonl(std::ostream& os, const Dataset& data);
Dataset read_jsonl(std::istream& is);
Dataset read_jsonl_file(const std::string& path);
void write_jsonl_file(const std::string& path, const Dataset& data);

void write_replay_jsonl(std::ostream& os, const std::vector<ReplaySession>& sessions);
std::vector<ReplaySession> read_replay_jsonl(std::istream& is);
std::vector<ReplaySession> read_replay_jsonl_file(const std::string& path);

}  // namespace rankkit
