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
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rankkit {

class Rng;

/// Dense row-major array of doubles. Rank 1 and rank 2 are the only shapes
/// the numeric routines accept; higher ranks are representable but callers
/// loop explicitly.
class Tensor {
 public:
  Tensor() = default;
  /// Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor vector(std::vector<double> values);
  static Tensor zeros(std::size_t n) { return Tensor({n}); }
  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * shape_[1], shape_[1]}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * shape_[1], shape_[1]};
  }
  const std::vector<double>& values() const { return data_; }
  std::vector<double>& values() { return data_; }

  void fill(double v);
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

/// Standard matrix product of two rank-2 tensors.
Tensor matmul(const Tensor& a, const Tensor& b);
/// Row-wise softmax of m / temperature with max subtraction.
Tensor softmax_rows(const Tensor& m, double temperature);

/// Kernels on raw spans used by the layers' forward and backward passes.
namespace kernels {
// out = A x, A is rows x cols.
void matvec(const Tensor& a, std::span<const double> x, std::span<double> out);
// out = A^T x.
void matvec_t(const Tensor& a, std::span<const double> x, std::span<double> out);
// out += A^T x.
void matvec_t_acc(const Tensor& a, std::span<const double> x, std::span<double> out);
// out += A x.
void matvec_acc(const Tensor& a, std::span<const double> x, std::span<double> out);
// G += u v^T.
void outer_acc(Tensor& g, std::span<const double> u, std::span<const double> v);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace kernels

/// A trainable tensor with its gradient, optimizer slots, and the optional
/// diagonal Fisher estimate used by incremental training.
///
/// Row-sparse parameters (embedding tables) track which rows received
/// gradient since the last zero_grad(); optimizers and gradient clearing only
/// visit those rows.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value, bool row_sparse = false);

  std::string name;
  Tensor value;
  Tensor grad;
  std::optional<Tensor> fisher_diag;

  Tensor slot_m;
  Tensor slot_v;

  bool row_sparse = false;
  std::vector<std::size_t> touched_rows;

  void zero_grad();
  void mark_row(std::size_t r);
  std::size_t row_width() const { return value.rank() == 2 ? value.cols() : 1; }
  /// Visits every element index that may hold nonzero gradient.
  void for_each_active(const std::function<void(std::size_t)>& fn) const;

 private:
  std::vector<char> row_flag_;
};

using ParameterList = std::vector<Parameter*>;

std::size_t count_elements(const ParameterList& params);

/// Central-difference gradient of a scalar function of the parameters:
/// (f(w + eps e_i) - f(w - eps e_i)) / (2 eps) for every element. Values are
/// restored after each probe.
std::vector<Tensor> finite_diff_grad(const std::function<double()>& f,
                                     const ParameterList& params, double epsilon);

/// Xavier/Glorot uniform initialization: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
void xavier_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace rankkit
