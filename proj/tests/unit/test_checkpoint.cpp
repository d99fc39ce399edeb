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

#include <cstring>
#include <sstream>
#include <string>

#include "generators.hpp"
#include "rankkit/checkpoint.hpp"
#include "rankkit/config.hpp"
#include "rankkit/error.hpp"
#include "rankkit/training.hpp"

namespace rankkit {
namespace {

using testing::Gen;

ModelConfig topology() {
  ModelConfig c;
  c.dense_dim = 4;
  c.id_features = {"member", "item"};
  c.embedding.quotient_size = 13;
  c.embedding.remainder_size = 7;
  c.embedding.dim = 3;
  c.interaction = Interaction::kResidual;
  c.rank = 2;
  c.hidden = {6};
  c.gating = true;
  c.isotonic = true;
  c.isotonic_config.bucket_count = 20;
  c.calibration_feature = "device";
  return c;
}

MultiTaskModel random_model(std::uint64_t seed) {
  MultiTaskModel m(topology());
  Gen g(seed);
  for (Parameter* p : m.parameters()) g.randomize(p->value, -0.5, 0.5);
  return m;
}

std::string bytes_of(const Checkpoint& c) {
  std::ostringstream os;
  save_checkpoint(c, os);
  return os.str();
}

Checkpoint reload(const Checkpoint& c) {
  std::istringstream is(bytes_of(c));
  return load_checkpoint(is);
}

void expect_same_logits(const MultiTaskModel& a, const MultiTaskModel& b, std::uint64_t seed) {
  Gen g(seed);
  for (const auto& ex : g.dataset(30, 4, a.config().tasks)) {
    EXPECT_EQ(a.logits(ex), b.logits(ex));
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  MultiTaskModel m = random_model(1);
  Gen g(2);
  fisher_diag(m, g.dataset(40, 4, m.config().tasks));
  Checkpoint c = capture_checkpoint(m);
  c.metadata["steps"] = "123";
  EXPECT_TRUE(c.has_fisher());
  const Checkpoint back = reload(c);
  EXPECT_EQ(back.kind, "cold");
  EXPECT_EQ(back.tensors, c.tensors);
  EXPECT_EQ(back.metadata, c.metadata);
  EXPECT_EQ(model_config_to_json(back.model_config), model_config_to_json(c.model_config));
  MultiTaskModel restored = restore_model(back);
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    const Parameter* a = m.parameters()[i];
    const Parameter* b = restored.parameters()[i];
    ASSERT_EQ(a->name, b->name);
    ASSERT_EQ(a->value.size(), b->value.size());
    EXPECT_EQ(std::memcmp(a->value.values().data(), b->value.values().data(), a->value.size() * sizeof(double)), 0)
        << a->name;
    EXPECT_EQ(a->fisher_diag, b->fisher_diag) << a->name;
  }
  expect_same_logits(m, restored, 3);
}

TEST(Checkpoint, SnapshotSplitsWeightsAndFisher) {
  MultiTaskModel m = random_model(4);
  Gen g(5);
  fisher_diag(m, g.dataset(10, 4, m.config().tasks));
  const Snapshot s = snapshot_of(capture_checkpoint(m));
  for (const Parameter* p : m.parameters()) {
    EXPECT_EQ(s.weights.at(p->name), p->value);
    EXPECT_EQ(s.fisher.at(p->name), p->fisher_diag);
  }
  EXPECT_EQ(s.weights.size(), m.parameters().size());
}

TEST(Checkpoint, QuantizedTablesTravelAsInt8) {
  MultiTaskModel m = random_model(6);
  m.quantize_embeddings();
  ASSERT_TRUE(m.embeddings_quantized());
  const Checkpoint c = capture_checkpoint(m);
  ASSERT_FALSE(c.quantized_tables.empty());
  for (const auto& name : c.quantized_tables) {
    EXPECT_EQ(c.tensors.at(name).dtype, Dtype::kI8);
    EXPECT_EQ(c.tensors.at(name + "/middle").dtype, Dtype::kF64);
    EXPECT_EQ(c.tensors.at(name + "/scale").dtype, Dtype::kF64);
  }
  const Checkpoint back = reload(c);
  EXPECT_EQ(back.tensors, c.tensors);
  EXPECT_EQ(back.quantized_tables, c.quantized_tables);
  const MultiTaskModel restored = restore_model(back);
  EXPECT_TRUE(restored.embeddings_quantized());
  expect_same_logits(m, restored, 7);
  // The full-precision checkpoint carries more embedding bytes.
  MultiTaskModel full = random_model(6);
  EXPECT_LT(embedding_payload_bytes(c), embedding_payload_bytes(capture_checkpoint(full)));
}

TEST(Checkpoint, PosteriorsRoundTrip) {
  MultiTaskModel m = random_model(8);
  Checkpoint c = capture_checkpoint(m, "incremental");
  Gen g(9);
  Posterior p = Posterior::prior(3, 2.0, 0.5);
  std::vector<Tensor> z;
  for (int i = 0; i < 7; ++i) z.push_back(g.tensor(3));
  p = posterior_update(p, z, g.vec(7));
  c.posteriors["click"] = p;
  const Checkpoint back = reload(c);
  EXPECT_EQ(back.kind, "incremental");
  ASSERT_EQ(back.posteriors.count("click"), 1u);
  const Posterior& q = back.posteriors.at("click");
  EXPECT_EQ(q.dim, p.dim);
  EXPECT_EQ(q.prior_scale, p.prior_scale);
  EXPECT_EQ(q.noise_variance, p.noise_variance);
  EXPECT_EQ(q.observation_count, p.observation_count);
  EXPECT_EQ(q.precision, p.precision);
  EXPECT_EQ(q.moment, p.moment);
  EXPECT_EQ(back.tensors, c.tensors);
}

TEST(Checkpoint, SavingTwiceGivesIdenticalBytes) {
  MultiTaskModel a = random_model(10);
  MultiTaskModel b = random_model(10);
  const std::string first = bytes_of(capture_checkpoint(a));
  EXPECT_EQ(first, bytes_of(capture_checkpoint(b)));
  EXPECT_EQ(first.substr(0, 4), "LRK1");
  EXPECT_EQ(bytes_of(reload(capture_checkpoint(a))), first);
}

TEST(Checkpoint, TopologyMismatchIsSchemaError) {
  MultiTaskModel m = random_model(11);
  const Checkpoint c = capture_checkpoint(m);
  ModelConfig other = topology();
  other.hidden = {7};
  MultiTaskModel wider(other);
  EXPECT_THROW(load_weights(wider, c), SchemaError);
  other = topology();
  other.id_features = {"member"};
  MultiTaskModel fewer(other);
  EXPECT_THROW(load_weights(fewer, c), SchemaError);
  MultiTaskModel same(topology());
  EXPECT_NO_THROW(load_weights(same, c));
  expect_same_logits(m, same, 12);
}

TEST(Checkpoint, CorruptFilesAreRejected) {
  MultiTaskModel m = random_model(13);
  const std::string good = bytes_of(capture_checkpoint(m));
  {
    std::string bad = good;
    bad[0] = 'X';
    std::istringstream is(bad);
    EXPECT_THROW(load_checkpoint(is), DataError);
  }
  {
    std::string bad = good;
    bad[4] = 9;
    std::istringstream is(bad);
    EXPECT_THROW(load_checkpoint(is), SnapshotError);
  }
  {
    std::istringstream is(good.substr(0, good.size() - 5));
    EXPECT_THROW(load_checkpoint(is), DataError);
  }
  EXPECT_THROW(load_checkpoint_file("/nonexistent/model.lrk"), DataError);
}

}  // namespace
}  // namespace rankkit
