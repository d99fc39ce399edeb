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

#include <array>
#include <cstdint>
#include <string_view>

namespace rankkit {

/// xoshiro256** 1.0 (Blackman & Vigna), state seeded through splitmix64.
///
/// Every derived quantity (uniform doubles, normals, bounded integers) is
/// computed with explicit arithmetic rather than <random> distributions, whose
/// output is implementation-defined. Integer and uniform streams are
/// bit-identical across compilers and platforms; normals additionally depend
/// on the platform's log/sin/cos.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent stream keyed by a name ("datagen", "init", "shuffle",
  /// "bandit", ...). The child seed mixes the parent seed with the MurmurHash3
  /// of the name, so streams for different names never share state.
  static Rng stream(std::uint64_t seed, std::string_view name);
  Rng substream(std::string_view name) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n) by rejection (no modulo bias). n > 0.
  std::uint64_t uniform_int(std::uint64_t n);
  /// Standard normal via the Box-Muller transform (one cached spare).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t seed() const { return seed_; }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace rankkit
