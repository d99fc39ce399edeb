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
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rankkit/hash.hpp"
#include "rankkit/tensor.hpp"

namespace rankkit {

class Rng;

// ---------------------------------------------------------------------------
// Middle-max row-wise 8-bit quantization.

struct QuantizedTable {
  static constexpr int kBits = 8;

  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<std::int8_t> payload;  // rows x dim, row-major
  Tensor middle;                     // rows
  Tensor scale;                      // rows, >= 0; 0 only for constant rows

  std::span<const std::int8_t> codes(std::size_t row) const {
    return {payload.data() + row * dim, dim};
  }
  /// Serialized size: int8 payload plus two f64 values per row.
  static std::size_t byte_size(std::size_t rows, std::size_t dim) {
    return rows * dim + rows * 2 * sizeof(double);
  }
  std::size_t byte_size() const { return byte_size(rows, dim); }
};

/// Per row: middle = (max 2^(b-1) + min (2^(b-1) - 1)) / (2^b - 1),
/// scale = (max - min) / (2^b - 1), code = round((x - middle) / scale) with
/// round-half-away-from-zero. Codes land in [-128, 127]; min maps to -128 and
/// max to 127. Constant rows store middle = the constant, scale 0, codes 0.
QuantizedTable quantize_table(const Tensor& full);

/// middle_i + code * scale_i.
Tensor dequantize_row(const QuantizedTable& table, std::size_t row);
void dequantize_row_acc(const QuantizedTable& table, std::size_t row, std::span<double> out);
Tensor dequantize_table(const QuantizedTable& table);

/// cast(cast(x -> int32) -> int8) == x.
bool int8_roundtrip_check(std::int8_t x);
/// Runs the check over all 256 int8 values.
bool int8_roundtrip_selftest();

// ---------------------------------------------------------------------------
// Embedding tables and hashed lookups.

/// One embedding matrix. Trainable in full precision, or frozen in quantized
/// form after post-training quantization.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(const std::string& name, std::size_t rows, std::size_t dim);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  const std::string& name() const { return param.name; }

  void init_uniform(double scale, Rng& rng);
  void add_row(std::size_t row, std::span<double> out) const;
  void accumulate_grad(std::size_t row, std::span<const double> g);

  bool quantized() const { return quantized_.has_value(); }
  const QuantizedTable& quantized_table() const { return *quantized_; }
  /// Replaces the full-precision values with their quantized form.
  void quantize();
  void set_quantized(QuantizedTable table);

  Parameter param;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::optional<QuantizedTable> quantized_;
};

/// Sparse id feature -> dense vector, vocabulary free.
class IdEmbedding {
 public:
  virtual ~IdEmbedding() = default;
  virtual std::size_t dim() const = 0;
  /// out += embedding(id)
  virtual void lookup_acc(std::string_view id, std::span<double> out) const = 0;
  /// Adds upstream into the gradient rows touched by id.
  virtual void backward(std::string_view id, std::span<const double> upstream) = 0;
  virtual std::vector<EmbeddingTable*> tables() = 0;
  virtual std::vector<const EmbeddingTable*> tables() const = 0;
  virtual std::size_t parameter_count() const = 0;

  Tensor lookup(std::string_view id) const;
  void init(double scale, Rng& rng);
};

enum class SplitMode { kSingle32, kDual32 };
enum class Aggregation { kSum, kMultiply };

/// Quotient/remainder lookup of a 32-bit hashed index.
struct QrIndex {
  std::uint64_t quotient;
  std::uint64_t remainder;
};
QrIndex qr_indices(std::uint64_t n, std::uint64_t quotient_size, std::uint64_t remainder_size);

/// Two small tables indexed by quotient and remainder of the hashed id, rows
/// summed. In single32 mode the low 32 bits of hash_id index one table pair;
/// dual32 splits the 64-bit hash into two 32-bit halves that index two
/// independent pairs, and all four rows are summed.
class QRHashEmbedding : public IdEmbedding {
 public:
  QRHashEmbedding(const std::string& name, std::size_t quotient_size, std::size_t remainder_size,
                  std::size_t dim, SplitMode split = SplitMode::kSingle32,
                  Aggregation aggregation = Aggregation::kSum);

  std::size_t dim() const override { return dim_; }
  void lookup_acc(std::string_view id, std::span<double> out) const override;
  void backward(std::string_view id, std::span<const double> upstream) override;
  std::vector<EmbeddingTable*> tables() override;
  std::vector<const EmbeddingTable*> tables() const override;
  std::size_t parameter_count() const override;

  std::size_t quotient_size() const { return quotient_size_; }
  std::size_t remainder_size() const { return remainder_size_; }
  SplitMode split_mode() const { return split_; }

  /// (table index, row) pairs touched by an id, in table order.
  std::vector<std::pair<std::size_t, std::size_t>> rows_for(std::string_view id) const;

 private:
  std::size_t quotient_size_;
  std::size_t remainder_size_;
  std::size_t dim_;
  SplitMode split_;
  // single32: {quotient, remainder}; dual32: {q_low, r_low, q_high, r_high}
  std::vector<EmbeddingTable> tables_;
};

/// Uncompressed baseline: one table, row = low 32 bits of hash_id mod rows.
class DenseHashEmbedding : public IdEmbedding {
 public:
  DenseHashEmbedding(const std::string& name, std::size_t rows, std::size_t dim);

  std::size_t dim() const override { return table_.dim(); }
  void lookup_acc(std::string_view id, std::span<double> out) const override;
  void backward(std::string_view id, std::span<const double> upstream) override;
  std::vector<EmbeddingTable*> tables() override { return {&table_}; }
  std::vector<const EmbeddingTable*> tables() const override { return {&table_}; }
  std::size_t parameter_count() const override { return table_.rows() * table_.dim(); }

  std::size_t row_for(std::string_view id) const;

 private:
  EmbeddingTable table_;
};

}  // namespace rankkit
