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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "rankkit/tensor.hpp"

namespace rankkit {

struct IsotonicConfig {
  double step = 0.1;
  std::size_t bucket_count = 200;
  // Inputs are bucketized as y - y_min so negative logits land in buckets.
  double y_min = -10.0;
  // Rows of the calibration-feature embedding (width bucket_count). 0 means
  // the layer takes no calibration feature.
  std::size_t feature_rows = 0;
};

/// Piecewise-linear monotone calibration of a logit, trained jointly with
/// the model:
///
///   u = y - y_min
///   out = sum_{i<=k} relu(e_i + w_i) * v_i + b
///
/// where v_i = step for i < k and v_k = u - step * k, k being the last
/// bucket whose lower edge is below u (clamped to bucket_count - 1 so the last
/// segment extends without bound). For u <= 0 a single signed segment is
/// used: k = 0, v_0 = u. e is the embedding row of the calibration feature,
/// or zero when the layer has none.
class IsotonicLayer {
 public:
  IsotonicLayer() = default;
  IsotonicLayer(const std::string& prefix, const IsotonicConfig& config);

  struct Cache {
    double u = 0.0;
    std::size_t k = 0;
    double v_last = 0.0;
    std::optional<std::size_t> feature_row;
  };

  /// Slopes 1, b = y_min: the identity map above y_min.
  void init_identity();

  const IsotonicConfig& config() const { return config_; }
  bool has_feature() const { return config_.feature_rows > 0; }
  std::size_t feature_row(std::string_view calib_id) const;

  double forward(double y, std::optional<std::string_view> calib_id, Cache& cache) const;
  double forward(double y, std::optional<std::string_view> calib_id = std::nullopt) const;
  /// Accumulates parameter gradients; returns d(out)/dy * upstream.
  double backward(const Cache& cache, double upstream);

  /// relu(e_i + w_i) for the given feature row (or e = 0).
  double slope(std::size_t i, std::optional<std::size_t> feature_row = std::nullopt) const;

  void collect(ParameterList& out);
  std::size_t parameter_count() const;

  /// CSV with columns bucket_index,lower_edge,slope,cumulative_output, where
  /// cumulative_output is the calibrated value at the bucket's upper edge.
  void export_curve_csv(std::ostream& os,
                        std::optional<std::string_view> calib_id = std::nullopt) const;

  Parameter w;
  Parameter b;
  Parameter embedding;  // feature_rows x bucket_count, row-sparse; empty when unused

 private:
  double raw_slope(std::size_t i, std::optional<std::size_t> feature_row) const;

  IsotonicConfig config_;
};

/// Observed over expected: sum(labels) / sum(probabilities).
double oe_ratio(std::span<const double> labels, std::span<const double> probabilities);

}  // namespace rankkit
