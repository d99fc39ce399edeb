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

#include "rankkit/embeddings.hpp"

#include <algorithm>
#include <cmath>

#include "rankkit/error.hpp"
#include "rankkit/rng.hpp"

namespace rankkit {

// ---------------------------------------------------------------------------
// Quantization

QuantizedTable quantize_table(const Tensor& full) {
  if (full.rank() != 2) throw DimensionError("quantize_table expects a rank-2 table");
  if (!full.all_finite()) throw InputError("quantize_table: non-finite entry");
  constexpr double levels = (1 << QuantizedTable::kBits) - 1;     // 255
  constexpr double half = 1 << (QuantizedTable::kBits - 1);       // 128
  QuantizedTable q;
  q.rows = full.rows();
  q.dim = full.cols();
  q.payload.assign(q.rows * q.dim, 0);
  q.middle = Tensor::zeros(q.rows);
  q.scale = Tensor::zeros(q.rows);
  for (std::size_t i = 0; i < q.rows; ++i) {
    const auto row = full.row(i);
    if (row.empty()) continue;
    const auto [mn_it, mx_it] = std::minmax_element(row.begin(), row.end());
    const double mn = *mn_it;
    const double mx = *mx_it;
    if (mx == mn) {
      q.middle[i] = mn;
      q.scale[i] = 0.0;
      continue;
    }
    const double middle = (mx * half + mn * (half - 1.0)) / levels;
    const double scale = (mx - mn) / levels;
    q.middle[i] = middle;
    q.scale[i] = scale;
    for (std::size_t j = 0; j < q.dim; ++j) {
      double code = std::round((row[j] - middle) / scale);
      code = std::clamp(code, -128.0, 127.0);
      q.payload[i * q.dim + j] = static_cast<std::int8_t>(code);
    }
  }
  return q;
}

void dequantize_row_acc(const QuantizedTable& table, std::size_t row, std::span<double> out) {
  if (row >= table.rows) {
    throw BoundsError("row " + std::to_string(row) + " of " + std::to_string(table.rows));
  }
  if (out.size() != table.dim) throw DimensionError("dequantize_row output");
  const double middle = table.middle[row];
  const double scale = table.scale[row];
  const auto codes = table.codes(row);
  for (std::size_t j = 0; j < table.dim; ++j) out[j] += middle + codes[j] * scale;
}

Tensor dequantize_row(const QuantizedTable& table, std::size_t row) {
  Tensor out = Tensor::zeros(table.dim);
  dequantize_row_acc(table, row, out.span());
  return out;
}

Tensor dequantize_table(const QuantizedTable& table) {
  Tensor out = Tensor::zeros(table.rows, table.dim);
  for (std::size_t i = 0; i < table.rows; ++i) dequantize_row_acc(table, i, out.row(i));
  return out;
}

bool int8_roundtrip_check(std::int8_t x) {
  const auto wide = static_cast<std::int32_t>(x);
  return static_cast<std::int8_t>(wide) == x;
}

bool int8_roundtrip_selftest() {
  for (int v = -128; v <= 127; ++v) {
    if (!int8_roundtrip_check(static_cast<std::int8_t>(v))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// EmbeddingTable

EmbeddingTable::EmbeddingTable(const std::string& name, std::size_t rows, std::size_t dim)
    : param(name, Tensor::zeros(rows, dim), /*row_sparse=*/true), rows_(rows), dim_(dim) {
  if (rows == 0 || dim == 0) throw ParameterError("embedding table " + name + " is empty");
}

void EmbeddingTable::init_uniform(double scale, Rng& rng) {
  if (quantized()) throw ParameterError("cannot initialize quantized table " + name());
  for (auto& v : param.value.span()) v = rng.uniform(-scale, scale);
}

void EmbeddingTable::add_row(std::size_t row, std::span<double> out) const {
  if (quantized_) {
    dequantize_row_acc(*quantized_, row, out);
    return;
  }
  if (row >= rows_) throw BoundsError("embedding row out of range in " + name());
  kernels::axpy(1.0, param.value.row(row), out);
}

void EmbeddingTable::accumulate_grad(std::size_t row, std::span<const double> g) {
  if (quantized_) throw ParameterError("table " + name() + " is quantized and frozen");
  param.mark_row(row);
  kernels::axpy(1.0, g, param.grad.row(row));
}

void EmbeddingTable::quantize() {
  if (quantized_) throw ParameterError("table " + name() + " is already quantized");
  quantized_ = quantize_table(param.value);
  param.value = Tensor::zeros(0, dim_);
  param.grad = Tensor::zeros(0, dim_);
  param.touched_rows.clear();
}

void EmbeddingTable::set_quantized(QuantizedTable table) {
  if (table.rows != rows_ || table.dim != dim_) {
    throw DimensionError("quantized table shape mismatch for " + name());
  }
  quantized_ = std::move(table);
  param.value = Tensor::zeros(0, dim_);
  param.grad = Tensor::zeros(0, dim_);
  param.touched_rows.clear();
}

// ---------------------------------------------------------------------------
// Lookups

Tensor IdEmbedding::lookup(std::string_view id) const {
  Tensor out = Tensor::zeros(dim());
  lookup_acc(id, out.span());
  return out;
}

void IdEmbedding::init(double scale, Rng& rng) {
  for (EmbeddingTable* t : tables()) t->init_uniform(scale, rng);
}

QrIndex qr_indices(std::uint64_t n, std::uint64_t quotient_size, std::uint64_t remainder_size) {
  return {(n / remainder_size) % quotient_size, n % remainder_size};
}

QRHashEmbedding::QRHashEmbedding(const std::string& name, std::size_t quotient_size,
                                 std::size_t remainder_size, std::size_t dim, SplitMode split,
                                 Aggregation aggregation)
    : quotient_size_(quotient_size),
      remainder_size_(remainder_size),
      dim_(dim),
      split_(split) {
  if (aggregation != Aggregation::kSum) {
    throw ConfigError(
        "QR aggregation must be 'sum': multiplication aggregation has convergence issues "
        "from numerical precision when embeddings start near 0");
  }
  if (quotient_size == 0 || remainder_size == 0 || dim == 0) {
    throw ParameterError("QR embedding sizes must be positive");
  }
  tables_.reserve(4);
  tables_.emplace_back(name + "/quotient", quotient_size, dim);
  tables_.emplace_back(name + "/remainder", remainder_size, dim);
  if (split == SplitMode::kDual32) {
    tables_[0] = EmbeddingTable(name + "/quotient_lo", quotient_size, dim);
    tables_[1] = EmbeddingTable(name + "/remainder_lo", remainder_size, dim);
    tables_.emplace_back(name + "/quotient_hi", quotient_size, dim);
    tables_.emplace_back(name + "/remainder_hi", remainder_size, dim);
  }
}

std::vector<std::pair<std::size_t, std::size_t>> QRHashEmbedding::rows_for(
    std::string_view id) const {
  const std::uint64_t h = hash_id(id);
  const std::uint64_t lo = h & 0xffffffffULL;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const QrIndex a = qr_indices(lo, quotient_size_, remainder_size_);
  out.emplace_back(0, a.quotient);
  out.emplace_back(1, a.remainder);
  if (split_ == SplitMode::kDual32) {
    const QrIndex b = qr_indices(h >> 32, quotient_size_, remainder_size_);
    out.emplace_back(2, b.quotient);
    out.emplace_back(3, b.remainder);
  }
  return out;
}

void QRHashEmbedding::lookup_acc(std::string_view id, std::span<double> out) const {
  if (out.size() != dim_) throw DimensionError("QR lookup output");
  for (const auto& [t, row] : rows_for(id)) tables_[t].add_row(row, out);
}

void QRHashEmbedding::backward(std::string_view id, std::span<const double> upstream) {
  if (upstream.size() != dim_) throw DimensionError("QR upstream gradient");
  for (const auto& [t, row] : rows_for(id)) tables_[t].accumulate_grad(row, upstream);
}

std::vector<EmbeddingTable*> QRHashEmbedding::tables() {
  std::vector<EmbeddingTable*> out;
  for (auto& t : tables_) out.push_back(&t);
  return out;
}

std::vector<const EmbeddingTable*> QRHashEmbedding::tables() const {
  std::vector<const EmbeddingTable*> out;
  for (const auto& t : tables_) out.push_back(&t);
  return out;
}

std::size_t QRHashEmbedding::parameter_count() const {
  const std::size_t pairs = split_ == SplitMode::kDual32 ? 2 : 1;
  return pairs * (quotient_size_ + remainder_size_) * dim_;
}

DenseHashEmbedding::DenseHashEmbedding(const std::string& name, std::size_t rows,
                                       std::size_t dim)
    : table_(name + "/table", rows, dim) {}

std::size_t DenseHashEmbedding::row_for(std::string_view id) const {
  return static_cast<std::size_t>((hash_id(id) & 0xffffffffULL) % table_.rows());
}

void DenseHashEmbedding::lookup_acc(std::string_view id, std::span<double> out) const {
  if (out.size() != dim()) throw DimensionError("dense hash lookup output");
  table_.add_row(row_for(id), out);
}

void DenseHashEmbedding::backward(std::string_view id, std::span<const double> upstream) {
  table_.accumulate_grad(row_for(id), upstream);
}

}  // namespace rankkit
