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

// Checkpoint file layout (all integers little-endian):
//
//   "LRK1" | u32 format_version | u64 manifest_bytes | manifest (JSON) | payload
//
// The manifest lists every tensor as {name, shape, dtype, byte_offset,
// byte_length} with offsets relative to the payload start, plus the model
// configuration, the checkpoint kind, quantization and posterior metadata.
// Tensors are laid out in name order and nothing time-dependent is written,
// so saving the same state twice yields identical bytes.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rankkit/bandit.hpp"
#include "rankkit/model.hpp"
#include "rankkit/training.hpp"

namespace rankkit {

inline constexpr char kCheckpointMagic[4] = {'L', 'R', 'K', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class Dtype { kF64, kI8 };

struct TensorRecord {
  std::vector<std::size_t> shape;
  Dtype dtype = Dtype::kF64;
  std::vector<double> f64;
  std::vector<std::int8_t> i8;

  std::size_t element_count() const;
  std::size_t byte_length() const;
  friend bool operator==(const TensorRecord&, const TensorRecord&) = default;
};

struct Checkpoint {
  // "cold" or "incremental".
  std::string kind = "cold";
  ModelConfig model_config;
  std::map<std::string, TensorRecord> tensors;
  // Tables stored as int8 payload + "<name>/middle" + "<name>/scale".
  std::vector<std::string> quantized_tables;
  // One posterior per task head.
  std::map<std::string, Posterior> posteriors;
  // Free-form string metadata (training step counts, data paths, ...).
  std::map<std::string, std::string> metadata;

  bool has_fisher() const;
};

/// Weights, Fisher diagonals ("fisher/<param>") and quantized tables of a
/// model.
Checkpoint capture_checkpoint(MultiTaskModel& model, const std::string& kind = "cold");

/// Loads weights into an existing model. Any difference in tensor names or
/// shapes is a SchemaError.
void load_weights(MultiTaskModel& model, const Checkpoint& checkpoint);
/// Builds the model described by the checkpoint and loads it.
MultiTaskModel restore_model(const Checkpoint& checkpoint);

/// Weights and Fisher diagonals keyed by parameter name.
Snapshot snapshot_of(const Checkpoint& checkpoint);

void save_checkpoint(const Checkpoint& checkpoint, std::ostream& os);
Checkpoint load_checkpoint(std::istream& is);
void save_checkpoint_file(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint_file(const std::string& path);

/// Total payload bytes of the embedding tables (f64 or int8 + metadata).
std::size_t embedding_payload_bytes(const Checkpoint& checkpoint);

}  // namespace rankkit
