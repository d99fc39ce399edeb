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

#include "rankkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "rankkit/calibration.hpp"
#include "rankkit/error.hpp"
#include "rankkit/layers.hpp"
#include "rankkit/model.hpp"

namespace rankkit {

double auc(std::span<const double> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw DimensionError("auc: labels and scores differ");
  const std::size_t n = labels.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positives = 0.0;
  double rank_sum = 0.0;  // sum of (1-based, tie-averaged) ranks of positives
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[idx[k]] > 0.5) {
        positives += 1.0;
        rank_sum += avg_rank;
      }
    }
    i = j + 1;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw UndefinedMetricError("auc needs at least one positive and one negative label");
  }
  const double u = rank_sum - positives * (positives + 1.0) / 2.0;
  return u / (positives * negatives);
}

double combine_logits(double p_global, double p_random_effect) {
  constexpr double lo = 1e-12;
  constexpr double hi = 1.0 - 1e-12;
  auto logit = [&](double p) {
    p = std::clamp(p, lo, hi);
    return std::log(p / (1.0 - p));
  };
  return sigmoid(logit(p_global) + logit(p_random_effect));
}

SessionScorer per_item_scorer(std::function<double(const TrainingExample&)> score) {
  return [score = std::move(score)](const ReplaySession& s) {
    std::vector<double> out;
    out.reserve(s.served.size());
    for (const auto& item : s.served) {
      auto it = s.candidates.find(item);
      if (it == s.candidates.end()) {
        throw DataError("session " + s.session_id + " has no features for item " + item);
      }
      out.push_back(score(it->second));
    }
    return out;
  };
}

ReplayResult replay_contribution_rate(std::span<const ReplaySession> sessions,
                                      const SessionScorer& scorer) {
  ReplayResult r;
  for (const auto& s : sessions) {
    if (s.served.empty()) throw DataError("session " + s.session_id + " served nothing");
    ++r.sessions;
    const auto scores = scorer(s);
    if (scores.size() != s.served.size()) {
      throw DimensionError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                           std::to_string(s.served.size()) + " items");
    }
    // Stable descending order: strict > keeps the earliest served item on ties.
    std::size_t top = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
      if (scores[i] > scores[top]) top = i;
    }
    if (top != 0) continue;
    ++r.matched;
    if (s.contributions.count(s.served.front())) ++r.matched_with_contribution;
  }
  if (r.matched > 0) {
    r.rate = static_cast<double>(r.matched_with_contribution) / static_cast<double>(r.matched);
  }
  return r;
}

std::optional<double> MetricsReport::auc() const {
  auto it = per_task.find(headline_task);
  return it == per_task.end() ? std::nullopt : it->second.auc;
}

std::optional<double> MetricsReport::oe_ratio() const {
  auto it = per_task.find(headline_task);
  return it == per_task.end() ? std::nullopt : it->second.oe_ratio;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string opt_csv(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(17);
  os << *v;
  return os.str();
}

}  // namespace

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["auc"] = opt_json(auc());
  j["oe_ratio"] = opt_json(oe_ratio());
  j["headline_task"] = headline_task;
  if (replay) {
    j["replay"] = {{"rate", opt_json(replay->rate)},
                   {"matched", replay->matched},
                   {"matched_with_contribution", replay->matched_with_contribution},
                   {"sessions", replay->sessions}};
  } else {
    j["replay"] = nullptr;
  }
  nlohmann::json tasks = nlohmann::json::object();
  for (const auto& [task, m] : per_task) {
    tasks[task] = {{"auc", opt_json(m.auc)},
                   {"oe_ratio", opt_json(m.oe_ratio)},
                   {"count", m.count},
                   {"positives", m.positives}};
  }
  j["per_task"] = tasks;
  return j.dump(2) + "\n";
}

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os << "metric,task,value\n";
  os << "auc," << headline_task << ',' << opt_csv(auc()) << '\n';
  os << "oe_ratio," << headline_task << ',' << opt_csv(oe_ratio()) << '\n';
  for (const auto& [task, m] : per_task) {
    os << "task_auc," << task << ',' << opt_csv(m.auc) << '\n';
    os << "task_oe_ratio," << task << ',' << opt_csv(m.oe_ratio) << '\n';
    os << "task_count," << task << ',' << m.count << '\n';
    os << "task_positives," << task << ',' << m.positives << '\n';
  }
  if (replay) {
    os << "replay_rate,," << opt_csv(replay->rate) << '\n';
    os << "replay_matched,," << replay->matched << '\n';
    os << "replay_matched_with_contribution,," << replay->matched_with_contribution << '\n';
  }
  return os.str();
}

MetricsReport evaluate(const MultiTaskModel& model, const Dataset& data,
                       const std::string& headline_task) {
  const auto& tasks = model.config().tasks;
  MetricsReport report;
  report.headline_task = headline_task.empty() ? tasks.front() : headline_task;
  std::vector<std::vector<double>> labels(tasks.size());
  std::vector<std::vector<double>> probs(tasks.size());
  for (const auto& ex : data) {
    const auto z = model.logits(ex);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      auto y = ex.label(tasks[t]);
      if (!y) continue;
      labels[t].push_back(static_cast<double>(*y));
      probs[t].push_back(sigmoid(z[t]));
    }
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    TaskMetrics m;
    m.count = static_cast<std::int64_t>(labels[t].size());
    m.positives = static_cast<std::int64_t>(
        std::count_if(labels[t].begin(), labels[t].end(), [](double v) { return v > 0.5; }));
    try {
      m.auc = rankkit::auc(labels[t], probs[t]);
    } catch (const UndefinedMetricError&) {
    }
    try {
      m.oe_ratio = oe_ratio(labels[t], probs[t]);
    } catch (const UndefinedMetricError&) {
    }
    report.per_task[tasks[t]] = m;
  }
  return report;
}

}  // namespace rankkit
