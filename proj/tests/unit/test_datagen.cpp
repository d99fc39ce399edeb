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


#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "rankkit/datagen.hpp"
#include "rankkit/error.hpp"
#include "rankkit/eval.hpp"

namespace rankkit {
namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

WorldConfig small_world() {
  WorldConfig c;
  c.member_vocab = 200;
  c.item_vocab = 200;
  return c;
}

TEST(Generate, ZeroWorldIsAFairCoin) {
  const WorldModel world(WorldConfig::zero(), 1);
  const std::size_t n = 20000;
  const Dataset data = generate(world, n, 0, Rng(2));
  const double sigma = std::sqrt(0.25 / n);
  for (const auto& task : world.config().tasks) {
    double pos = 0.0;
    for (const auto& ex : data) pos += ex.labels.at(task);
    EXPECT_NEAR(pos / n, 0.5, 3.0 * sigma) << task;
  }
  for (const auto& ex : data) {
    EXPECT_EQ(world.probability(ex, 0, 0), 0.5);
  }
}

TEST(Generate, DeterministicUnderSeeds) {
  const WorldModel a(small_world(), 7);
  const WorldModel b(small_world(), 7);
  EXPECT_EQ(generate(a, 500, 3, Rng(9)), generate(b, 500, 3, Rng(9)));
  EXPECT_NE(generate(a, 500, 3, Rng(9)), generate(a, 500, 3, Rng(10)));
  EXPECT_NE(generate(a, 500, 3, Rng(9)), generate(a, 500, 4, Rng(9)));
}

TEST(Generate, FieldsAreWellFormed) {
  const WorldModel world(small_world(), 3);
  const Dataset data = generate(world, 100, 2, Rng(4));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ex = data[i];
    EXPECT_EQ(ex.dense.size(), world.config().dense_dim);
    EXPECT_EQ(ex.ids.at("member").size(), 1u);
    EXPECT_EQ(ex.ids.at("item").size(), 1u);
    EXPECT_EQ(ex.ids.at("device").size(), 1u);
    EXPECT_EQ(ex.labels.size(), 3u);
    EXPECT_GE(ex.timestamp, 2 * world.config().window_seconds);
    EXPECT_LT(ex.timestamp, 3 * world.config().window_seconds);
    EXPECT_EQ(ex.position, static_cast<int>(i % 10) + 1);
  }
  EXPECT_THROW(generate(world, 0, 0, Rng(1)), ParameterError);
}

TEST(Generate, ItemDriftShiftsRateByClosedForm) {
  // Zero world with a +2 bias step on item 0 from window 1 onward: that
  // item's probability moves from sigma(0) to sigma(2).
  WorldModel world(WorldConfig::zero(), 5);
  world.add_item_drift(0, 1, 2.0);
  EXPECT_EQ(world.item_bias(0, 0), 0.0);
  EXPECT_EQ(world.item_bias(0, 1), 2.0);
  EXPECT_EQ(world.item_bias(0, 9), 2.0);
  const std::size_t n = 60000;
  double rate[2];
  double count[2];
  for (std::size_t w = 0; w < 2; ++w) {
    const Dataset data = generate(world, n, w, Rng(6));
    double pos = 0.0, k = 0.0;
    for (const auto& ex : data) {
      if (ex.ids.at("item")[0] != item_id(0)) continue;
      k += 1.0;
      pos += ex.labels.at("click");
    }
    ASSERT_GT(k, 1000.0);
    rate[w] = pos / k;
    count[w] = k;
  }
  const double p0 = 0.5, p1 = logistic(2.0);
  EXPECT_NEAR(rate[0], p0, 4.0 * std::sqrt(p0 * (1 - p0) / count[0]));
  EXPECT_NEAR(rate[1], p1, 4.0 * std::sqrt(p1 * (1 - p1) / count[1]));
  const double diff_sd =
      std::sqrt(p0 * (1 - p0) / count[0] + p1 * (1 - p1) / count[1]);
  EXPECT_NEAR(rate[1] - rate[0], p1 - p0, 4.0 * diff_sd);
}

TEST(Generate, LabelMarginalsMatchGroundTruth) {
  const WorldModel world(WorldConfig{}, 11);
  const std::size_t n = 20000;
  const Dataset data = generate(world, n, 1, Rng(12));
  for (std::size_t t = 0; t < world.config().tasks.size(); ++t) {
    const auto& task = world.config().tasks[t];
    double observed = 0.0, expected = 0.0, var = 0.0;
    for (const auto& ex : data) {
      const double p = world.probability(ex, t, 1);
      ASSERT_GT(p, 0.0);
      ASSERT_LT(p, 1.0);
      observed += ex.labels.at(task);
      expected += p;
      var += p * (1 - p);
    }
    EXPECT_NEAR(observed, expected, 4.0 * std::sqrt(var)) << task;
    // Offsets were solved for the configured marginal rates.
    EXPECT_NEAR(expected / n, world.config().task_rates[t],
                0.2 * world.config().task_rates[t])
        << task;
  }
}

TEST(Generate, ZipfHeadDominates) {
  const WorldModel world(WorldConfig{}, 2);
  Rng rng(3);
  std::vector<int> hits(world.config().item_vocab, 0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) ++hits[world.sample_item(rng)];
  double z = 0.0;
  for (std::size_t k = 0; k < hits.size(); ++k) z += std::pow(k + 1.0, -1.2);
  const double p0 = 1.0 / z;
  EXPECT_NEAR(hits[0] / static_cast<double>(n), p0, 4.0 * std::sqrt(p0 * (1 - p0) / n));
  EXPECT_GT(hits[0], hits[1]);
  EXPECT_GT(hits[1], hits[10]);
}

TEST(Jsonl, RoundTripIsExact) {
  const WorldModel world(small_world(), 1);
  Dataset data = generate(world, 300, 0, Rng(2));
  data[0].labels.erase("like");
  data[1].ids["member"].push_back("m_extra");
  std::stringstream ss;
  write_jsonl(ss, data);
  EXPECT_EQ(read_jsonl(ss), data);
}

TEST(Jsonl, RejectsMalformedLinesNamingTheLine) {
  const std::string good =
      R"({"dense":[1.0],"ids":{"member":["m1"]},"labels":{"click":1},"ts":0,"session":"s","pos":1})";
  const std::vector<std::string> bad = {
      "{not json",
      R"({"dense":[1.0],"ids":{},"labels":{"click":1},"ts":0,"session":"s","pos":1,"extra":2})",
      R"({"dense":[1.0],"ids":{},"labels":{"click":1},"ts":0,"session":"s"})",
      R"({"dense":[1.0],"ids":{},"labels":{"click":2},"ts":0,"session":"s","pos":1})",
      R"({"dense":["x"],"ids":{},"labels":{"click":1},"ts":0,"session":"s","pos":1})",
      R"({"dense":[1.0],"ids":{},"labels":{"click":1},"ts":0,"session":"s","pos":0})",
  };
  for (const auto& line : bad) {
    std::stringstream ss(good + "\n" + line + "\n");
    try {
      read_jsonl(ss);
      ADD_FAILURE() << "accepted: " << line;
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(read_jsonl_file("/nonexistent/rankkit.jsonl"), DataError);
}

double first_dense(const TrainingExample& ex) { return ex.dense[0]; }

TEST(ReplayLog, FullShuffleWhenTopNCoversAllCandidates) {
  const WorldModel world(small_world(), 4);
  const PseudoRandomRanker ranker(first_dense, 4, 99);
  ReplayConfig cfg;
  cfg.sessions = 4000;
  cfg.candidates = 4;
  cfg.top_n = 4;
  const auto log = generate_replay_log(world, ranker, cfg, Rng(5));
  std::vector<int> position_of_best(4, 0);
  for (const auto& s : log) {
    ASSERT_EQ(s.served.size(), 4u);
    std::size_t best = 0;
    for (std::size_t p = 1; p < 4; ++p) {
      if (first_dense(s.candidates.at(s.served[p])) >
          first_dense(s.candidates.at(s.served[best])))
        best = p;
    }
    ++position_of_best[best];
  }
  const double n = 4000.0, sd = std::sqrt(n * 0.25 * 0.75);
  for (int c : position_of_best) EXPECT_NEAR(c, n / 4.0, 4.0 * sd);
}

TEST(ReplayLog, OrderBelowTopNFollowsBaseScore) {
  const WorldModel world(small_world(), 4);
  const PseudoRandomRanker ranker(first_dense, 3, 1);
  ReplayConfig cfg;
  cfg.sessions = 200;
  cfg.candidates = 8;
  cfg.top_n = 3;
  for (const auto& s : generate_replay_log(world, ranker, cfg, Rng(1))) {
    std::set<std::string> ids(s.served.begin(), s.served.end());
    EXPECT_EQ(ids.size(), 8u);
    for (std::size_t p = 3; p + 1 < s.served.size(); ++p) {
      EXPECT_GE(first_dense(s.candidates.at(s.served[p])),
                first_dense(s.candidates.at(s.served[p + 1])));
    }
    // Every top-N item outranks every tail item under the base score.
    for (std::size_t p = 0; p < 3; ++p) {
      EXPECT_GE(first_dense(s.candidates.at(s.served[p])),
                first_dense(s.candidates.at(s.served[3])));
    }
  }
}

TEST(ReplayLog, SelfReplayMatchesEverySession) {
  const WorldModel world(small_world(), 8);
  const PseudoRandomRanker ranker(first_dense, 5, 123);
  ReplayConfig cfg;
  cfg.sessions = 500;
  const auto log = generate_replay_log(world, ranker, cfg, Rng(7));
  const ReplayResult r = replay_contribution_rate(log, ranker.as_scorer());
  EXPECT_EQ(r.matched, 500);
  std::int64_t top = 0;
  for (const auto& s : log) top += s.contributions.count(s.served[0]);
  EXPECT_EQ(r.matched_with_contribution, top);
}

TEST(ReplayLog, ZeroContributionWorld) {
  WorldConfig c = WorldConfig::zero();
  c.task_offsets = {0.0, -1000.0, -1000.0};
  const WorldModel world(c, 1);
  const PseudoRandomRanker ranker(first_dense, 5, 3);
  ReplayConfig cfg;
  cfg.sessions = 300;
  const auto log = generate_replay_log(world, ranker, cfg, Rng(2));
  for (const auto& s : log) EXPECT_TRUE(s.contributions.empty());
  const ReplayResult r = replay_contribution_rate(log, ranker.as_scorer());
  ASSERT_GT(r.matched, 0);
  EXPECT_EQ(*r.rate, 0.0);
}

TEST(ReplayLog, ContributionProbabilityCombinesLikeAndComment) {
  const WorldModel world(small_world(), 6);
  Rng rng(1);
  const TrainingExample ex = world.make_example(3, 4, 1, rng);
  const double pl = world.probability(ex, 1, 0), pc = world.probability(ex, 2, 0);
  EXPECT_NEAR(contribution_probability(world, ex, 0), 1.0 - (1.0 - pl) * (1.0 - pc), 1e-15);
}

TEST(ReplayLog, JsonlRoundTripAndValidation) {
  const WorldModel world(small_world(), 8);
  const PseudoRandomRanker ranker(first_dense, 5, 1);
  ReplayConfig cfg;
  cfg.sessions = 20;
  const auto log = generate_replay_log(world, ranker, cfg, Rng(3));
  std::stringstream ss;
  write_replay_jsonl(ss, log);
  const auto back = read_replay_jsonl(ss);
  ASSERT_EQ(back.size(), log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(back[i].session_id, log[i].session_id);
    EXPECT_EQ(back[i].served, log[i].served);
    EXPECT_EQ(back[i].contributions, log[i].contributions);
    EXPECT_EQ(back[i].candidates, log[i].candidates);
  }
  std::stringstream dup(R"({"session":"s","served":["a","a"],"contributions":[],"candidates":{}})");
  EXPECT_THROW(read_replay_jsonl(dup), DataError);
  std::stringstream empty(R"({"session":"s","served":[],"contributions":[],"candidates":{}})");
  EXPECT_THROW(read_replay_jsonl(empty), DataError);
}

TEST(ReplayLog, ParameterChecks) {
  EXPECT_THROW(PseudoRandomRanker(first_dense, 1, 0), ParameterError);
  const WorldModel world(small_world(), 8);
  const PseudoRandomRanker ranker(first_dense, 5, 1);
  ReplayConfig cfg;
  cfg.candidates = 3;
  EXPECT_THROW(generate_replay_log(world, ranker, cfg, Rng(1)), ParameterError);
}

}  // namespace
}  // namespace rankkit
