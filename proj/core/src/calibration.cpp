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

#include "rankkit/calibration.hpp"

#include <cmath>
#include <ostream>

#include "rankkit/error.hpp"
#include "rankkit/hash.hpp"

namespace rankkit {

IsotonicLayer::IsotonicLayer(const std::string& prefix, const IsotonicConfig& config)
    : w(prefix + "/w", Tensor::zeros(config.bucket_count)),
      b(prefix + "/b", Tensor::zeros(1)),
      config_(config) {
  if (!(config.step > 0.0)) throw ParameterError("isotonic step must be > 0");
  if (config.bucket_count == 0) throw ParameterError("isotonic bucket_count must be > 0");
  if (config.feature_rows > 0) {
    embedding = Parameter(prefix + "/embedding",
                          Tensor::zeros(config.feature_rows, config.bucket_count),
                          /*row_sparse=*/true);
  }
  init_identity();
}

void IsotonicLayer::init_identity() {
  w.value.fill(1.0);
  b.value[0] = config_.y_min;
  if (has_feature()) embedding.value.fill(0.0);
}

std::size_t IsotonicLayer::feature_row(std::string_view calib_id) const {
  return static_cast<std::size_t>(hash_id(calib_id) % config_.feature_rows);
}

double IsotonicLayer::raw_slope(std::size_t i, std::optional<std::size_t> feature_row) const {
  double s = w.value[i];
  if (feature_row) s += embedding.value.at(*feature_row, i);
  return s;
}

double IsotonicLayer::slope(std::size_t i, std::optional<std::size_t> feature_row) const {
  const double s = raw_slope(i, feature_row);
  return s > 0.0 ? s : 0.0;
}

double IsotonicLayer::forward(double y, std::optional<std::string_view> calib_id,
                              Cache& cache) const {
  if (!std::isfinite(y)) throw InputError("isotonic input must be finite");
  if (has_feature() != calib_id.has_value()) {
    throw InputError(has_feature() ? "isotonic layer requires a calibration feature"
                                   : "isotonic layer has no calibration feature");
  }
  cache.feature_row.reset();
  if (calib_id) cache.feature_row = feature_row(*calib_id);

  const double step = config_.step;
  const double u = y - config_.y_min;
  cache.u = u;
  if (u <= 0.0) {
    cache.k = 0;
    cache.v_last = u;
    return slope(0, cache.feature_row) * u + b.value[0];
  }
  // k = max{j : u - step * j > 0}.
  std::size_t k;
  const double ratio = u / step;
  if (ratio >= static_cast<double>(config_.bucket_count)) {
    k = config_.bucket_count - 1;
  } else {
    k = static_cast<std::size_t>(std::floor(ratio));
    if (k > 0 && u - step * static_cast<double>(k) <= 0.0) --k;
    if (k >= config_.bucket_count) k = config_.bucket_count - 1;
  }
  cache.k = k;
  cache.v_last = u - step * static_cast<double>(k);
  double out = 0.0;
  for (std::size_t i = 0; i < k; ++i) out += slope(i, cache.feature_row) * step;
  out += slope(k, cache.feature_row) * cache.v_last;
  return out + b.value[0];
}

double IsotonicLayer::forward(double y, std::optional<std::string_view> calib_id) const {
  Cache cache;
  return forward(y, calib_id, cache);
}

double IsotonicLayer::backward(const Cache& cache, double upstream) {
  const double step = config_.step;
  for (std::size_t i = 0; i <= cache.k; ++i) {
    if (raw_slope(i, cache.feature_row) <= 0.0) continue;
    const double v = i < cache.k ? step : cache.v_last;
    w.grad[i] += upstream * v;
    if (cache.feature_row) {
      embedding.mark_row(*cache.feature_row);
      embedding.grad.at(*cache.feature_row, i) += upstream * v;
    }
  }
  b.grad[0] += upstream;
  return upstream * slope(cache.k, cache.feature_row);
}

void IsotonicLayer::collect(ParameterList& out) {
  out.push_back(&w);
  out.push_back(&b);
  if (has_feature()) out.push_back(&embedding);
}

std::size_t IsotonicLayer::parameter_count() const {
  return w.value.size() + 1 + (has_feature() ? embedding.value.size() : 0);
}

void IsotonicLayer::export_curve_csv(std::ostream& os,
                                     std::optional<std::string_view> calib_id) const {
  std::optional<std::size_t> row;
  if (calib_id && has_feature()) row = feature_row(*calib_id);
  os << "bucket_index,lower_edge,slope,cumulative_output\n";
  double cumulative = b.value[0];
  const auto old_precision = os.precision(17);
  for (std::size_t i = 0; i < config_.bucket_count; ++i) {
    const double s = slope(i, row);
    cumulative += s * config_.step;
    os << i << ',' << config_.y_min + config_.step * static_cast<double>(i) << ',' << s << ','
       << cumulative << '\n';
  }
  os.precision(old_precision);
}

double oe_ratio(std::span<const double> labels, std::span<const double> probabilities) {
  if (labels.size() != probabilities.size()) {
    throw DimensionError("oe_ratio: labels and probabilities differ in length");
  }
  if (labels.empty()) throw UndefinedMetricError("oe_ratio of an empty set");
  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    observed += labels[i];
    expected += probabilities[i];
  }
  if (!(expected > 0.0)) throw UndefinedMetricError("oe_ratio: sum of probabilities is 0");
  return observed / expected;
}

}  // namespace rankkit
