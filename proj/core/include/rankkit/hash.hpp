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
#include <span>
#include <string_view>

namespace rankkit {

/// MurmurHash3_x64_128 (Austin Appleby's public-domain reference). Output is
/// the two 64-bit lanes {h1, h2}; the canonical 16-byte digest is h1 then h2,
/// each little-endian. Input is read byte-wise so the result does not depend
/// on host endianness or alignment.
std::array<std::uint64_t, 2> murmur3_x64_128(std::span<const std::uint8_t> bytes,
                                             std::uint32_t seed = 0);

/// 64-bit id hash used by the embedding lookups: the first 8 bytes of the
/// seed-0 MurmurHash3_x64_128 digest of the UTF-8 bytes, read little-endian
/// (i.e. lane h1).
std::uint64_t hash_id(std::string_view id);

}  // namespace rankkit
