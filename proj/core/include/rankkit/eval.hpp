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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rankkit/example.hpp"

namespace rankkit {

class MultiTaskModel;

/// Area under the ROC curve as the Mann-Whitney U statistic over n+ n- pairs,
/// ties counted 1/2. Computed from average ranks in O(n log n).
double auc(std::span<const double> labels, std::span<const double> scores);

/// sigma(logit(p_global) + logit(p_random_effect)); inputs are clamped to
/// [1e-12, 1 - 1e-12].
double combine_logits(double p_global, double p_random_effect);

struct ReplaySession {
  std::string session_id;
  // Items in the order they were served (top N randomized).
  std::vector<std::string> served;
  std::set<std::string> contributions;
  std::map<std::string, TrainingExample> candidates;
};

/// Scores for a session's served items, aligned with ReplaySession::served.
using SessionScorer = std::function<std::vector<double>(const ReplaySession&)>;

/// Adapts a per-example scorer (e.g. a model's click probability).
SessionScorer per_item_scorer(std::function<double(const TrainingExample&)> score);

struct ReplayResult {
  std::int64_t sessions = 0;
  std::int64_t matched = 0;
  std::int64_t matched_with_contribution = 0;
  // Empty when no impression matched.
  std::optional<double> rate;
};

/// Re-ranks each session's served items by descending score (ties keep the
/// served order). A session is matched when the re-ranked top item equals the
/// served top item; rate = matched with contribution / matched.
ReplayResult replay_contribution_rate(std::span<const ReplaySession> sessions,
                                      const SessionScorer& scorer);

struct TaskMetrics {
  std::optional<double> auc;
  std::optional<double> oe_ratio;
  std::int64_t count = 0;
  std::int64_t positives = 0;
};

struct MetricsReport {
  std::string headline_task;
  std::map<std::string, TaskMetrics> per_task;
  std::optional<ReplayResult> replay;

  std::optional<double> auc() const;
  std::optional<double> oe_ratio() const;

  /// {auc, oe_ratio, replay: {rate, matched, matched_with_contribution}, per_task: {...}};
  /// undefined values are null.
  std::string to_json() const;
  /// Flat mirror: metric,task,value.
  std::string to_csv() const;
};

/// Per-task AUC and O/E of the model on a dataset. Single-class slices leave
/// AUC undefined rather than failing.
MetricsReport evaluate(const MultiTaskModel& model, const Dataset& data,
                       const std::string& headline_task = "");

}  // namespace rankkit
