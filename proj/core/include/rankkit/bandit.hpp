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
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rankkit/tensor.hpp"

namespace rankkit {

class Rng;

inline constexpr std::size_t kMaxPosteriorDim = 512;

/// Gaussian posterior over last-layer weights in information form:
/// precision P = lambda I + sum z z^T / sigma^2 and moment b = sum z y / sigma^2,
/// so the mean is P^-1 b and the covariance P^-1. The prior mean is zero.
struct Posterior {
  std::size_t dim = 0;
  Tensor precision;  // dim x dim
  Tensor moment;     // dim
  double prior_scale = 1.0;
  double noise_variance = 1.0;
  std::int64_t observation_count = 0;

  static Posterior prior(std::size_t dim, double prior_scale = 1.0, double noise_variance = 1.0);

  Tensor mean() const;
  Tensor covariance() const;
};

/// Adds the batch's sufficient statistics. Order-independent up to floating
/// point summation; updating with A then B equals updating with A and B.
Posterior posterior_update(const Posterior& p, std::span<const Tensor> features,
                           std::span<const double> targets);

/// Lower-triangular L with L L^T = a. Throws NumericalError when a is not
/// positive definite.
Tensor cholesky(const Tensor& a);
/// Solves a x = b for symmetric positive definite a.
Tensor cholesky_solve(const Tensor& a, const Tensor& b);

/// One draw from N(mean, P^-1): mean + L^-T xi with L L^T = P. A failed
/// factorization is retried once with 1e-8 I added.
Tensor thompson_sample(const Posterior& p, Rng& rng);

/// Draws one weight vector and returns argmax_i w . z_i (lowest index on
/// ties).
std::size_t select_item(const Posterior& p, std::span<const Tensor> candidates, Rng& rng);
/// Argmax of w . z_i for a fixed weight vector.
std::size_t argmax_score(const Tensor& weights, std::span<const Tensor> candidates);

/// Bounded FIFO of (representation, target) rows. When the representation
/// is refreshed the stored rows are re-embedded by the caller and the
/// posterior rebuilt from them.
class FeatureBuffer {
 public:
  explicit FeatureBuffer(std::size_t capacity = 100000) : capacity_(capacity) {}

  void push(Tensor z, double y);
  std::size_t size() const { return rows_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<std::pair<Tensor, double>>& rows() const { return rows_; }
  Posterior rebuild(std::size_t dim, double prior_scale, double noise_variance) const;

 private:
  std::size_t capacity_;
  std::deque<std::pair<Tensor, double>> rows_;
};

}  // namespace rankkit
