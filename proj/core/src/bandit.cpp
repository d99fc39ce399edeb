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

#include "rankkit/bandit.hpp"

#include <cmath>

#include "rankkit/error.hpp"
#include "rankkit/rng.hpp"

namespace rankkit {

Posterior Posterior::prior(std::size_t dim, double prior_scale, double noise_variance) {
  if (dim == 0) throw ParameterError("posterior dimension must be positive");
  if (dim > kMaxPosteriorDim) {
    throw ConfigError("posterior dimension " + std::to_string(dim) + " exceeds " +
                      std::to_string(kMaxPosteriorDim));
  }
  if (!(prior_scale > 0.0) || !(noise_variance > 0.0)) {
    throw ParameterError("prior scale and noise variance must be > 0");
  }
  Posterior p;
  p.dim = dim;
  p.precision = Tensor::zeros(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) p.precision.at(i, i) = prior_scale;
  p.moment = Tensor::zeros(dim);
  p.prior_scale = prior_scale;
  p.noise_variance = noise_variance;
  return p;
}

Tensor Posterior::mean() const { return cholesky_solve(precision, moment); }

Posterior posterior_update(const Posterior& p, std::span<const Tensor> features,
                           std::span<const double> targets) {
  if (features.size() != targets.size()) {
    throw DimensionError("posterior_update: features and targets differ in length");
  }
  Posterior out = p;
  const double inv_noise = 1.0 / p.noise_variance;
  for (std::size_t n = 0; n < features.size(); ++n) {
    const Tensor& z = features[n];
    if (z.size() != p.dim) {
      throw DimensionError("feature of length " + std::to_string(z.size()) + ", posterior dim " +
                           std::to_string(p.dim));
    }
    // (z_i z_j) / sigma^2 keeps the precision exactly symmetric.
    for (std::size_t i = 0; i < p.dim; ++i) {
      if (z[i] == 0.0) continue;
      for (std::size_t j = 0; j < p.dim; ++j) out.precision.at(i, j) += (z[i] * z[j]) * inv_noise;
      out.moment[i] += z[i] * targets[n] * inv_noise;
    }
  }
  out.observation_count += static_cast<std::int64_t>(features.size());
  return out;
}

Tensor cholesky(const Tensor& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionError("cholesky needs a square matrix");
  Tensor l = Tensor::zeros(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a.at(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l.at(j, k) * l.at(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw NumericalError("matrix is not positive definite (pivot " + std::to_string(j) + ")");
    }
    const double ljj = std::sqrt(diag);
    l.at(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a.at(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
      l.at(i, j) = s / ljj;
    }
  }
  return l;
}

namespace {

// Solves L y = b (forward substitution).
Tensor forward_sub(const Tensor& l, const Tensor& b) {
  const std::size_t n = l.rows();
  Tensor y = Tensor::zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l.at(i, k) * y[k];
    y[i] = s / l.at(i, i);
  }
  return y;
}

// Solves L^T x = y (back substitution).
Tensor back_sub_t(const Tensor& l, const Tensor& y) {
  const std::size_t n = l.rows();
  Tensor x = Tensor::zeros(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l.at(k, i) * x[k];
    x[i] = s / l.at(i, i);
  }
  return x;
}

Tensor cholesky_with_jitter(const Tensor& a) {
  try {
    return cholesky(a);
  } catch (const NumericalError&) {
    Tensor jittered = a;
    for (std::size_t i = 0; i < a.rows(); ++i) jittered.at(i, i) += 1e-8;
    return cholesky(jittered);
  }
}

}  // namespace

Tensor cholesky_solve(const Tensor& a, const Tensor& b) {
  if (b.size() != a.rows()) throw DimensionError("cholesky_solve right-hand side");
  const Tensor l = cholesky(a);
  return back_sub_t(l, forward_sub(l, b));
}

Tensor Posterior::covariance() const {
  const Tensor l = cholesky(precision);
  Tensor inv = Tensor::zeros(dim, dim);
  Tensor e = Tensor::zeros(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    e.fill(0.0);
    e[c] = 1.0;
    const Tensor col = back_sub_t(l, forward_sub(l, e));
    for (std::size_t r = 0; r < dim; ++r) inv.at(r, c) = col[r];
  }
  return inv;
}

Tensor thompson_sample(const Posterior& p, Rng& rng) {
  const Tensor l = cholesky_with_jitter(p.precision);
  const Tensor mu = back_sub_t(l, forward_sub(l, p.moment));
  Tensor xi = Tensor::zeros(p.dim);
  for (auto& v : xi.span()) v = rng.normal();
  Tensor w = back_sub_t(l, xi);
  for (std::size_t i = 0; i < p.dim; ++i) w[i] += mu[i];
  return w;
}

std::size_t argmax_score(const Tensor& weights, std::span<const Tensor> candidates) {
  if (candidates.empty()) throw InputError("select_item needs at least one candidate");
  std::size_t best = 0;
  double best_score = kernels::dot(weights.span(), candidates[0].span());
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double s = kernels::dot(weights.span(), candidates[i].span());
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

std::size_t select_item(const Posterior& p, std::span<const Tensor> candidates, Rng& rng) {
  if (candidates.empty()) throw InputError("select_item needs at least one candidate");
  return argmax_score(thompson_sample(p, rng), candidates);
}

void FeatureBuffer::push(Tensor z, double y) {
  if (capacity_ == 0) return;
  if (rows_.size() == capacity_) rows_.pop_front();
  rows_.emplace_back(std::move(z), y);
}

Posterior FeatureBuffer::rebuild(std::size_t dim, double prior_scale,
                                 double noise_variance) const {
  std::vector<Tensor> z;
  std::vector<double> y;
  z.reserve(rows_.size());
  y.reserve(rows_.size());
  for (const auto& [f, t] : rows_) {
    z.push_back(f);
    y.push_back(t);
  }
  return posterior_update(Posterior::prior(dim, prior_scale, noise_variance), z, y);
}

}  // namespace rankkit
