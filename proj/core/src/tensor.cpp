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

#include "rankkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rankkit/error.hpp"
#include "rankkit/rng.hpp"

namespace rankkit {
namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (product(shape_) != data_.size()) {
    throw DimensionError("shape " + shape_string(shape_) + " does not hold " +
                         std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows() on rank-" + std::to_string(rank()));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols() on rank-" + std::to_string(rank()));
  return shape_[1];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw DimensionError("matmul needs rank-2 operands");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  const std::size_t m = b.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) out.at(i, j) += aip * b.at(p, j);
    }
  }
  return out;
}

Tensor softmax_rows(const Tensor& m, double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("softmax temperature must be > 0");
  if (m.rank() != 2) throw DimensionError("softmax_rows needs a rank-2 tensor");
  Tensor out(m.shape());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto in = m.row(r);
    auto dst = out.row(r);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end()) / temperature;
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = std::exp(in[c] / temperature - mx);
      z += dst[c];
    }
    for (auto& v : dst) v /= z;
  }
  return out;
}

namespace kernels {

void matvec(const Tensor& a, std::span<const double> x, std::span<double> out) {
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  if (x.size() != cols || out.size() != rows) throw DimensionError("matvec");
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a.span().data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

void matvec_acc(const Tensor& a, std::span<const double> x, std::span<double> out) {
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  if (x.size() != cols || out.size() != rows) throw DimensionError("matvec_acc");
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a.span().data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] += acc;
  }
}

void matvec_t(const Tensor& a, std::span<const double> x, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  matvec_t_acc(a, x, out);
}

void matvec_t_acc(const Tensor& a, std::span<const double> x, std::span<double> out) {
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  if (x.size() != rows || out.size() != cols) throw DimensionError("matvec_t");
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a.span().data() + r * cols;
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * xr;
  }
}

void outer_acc(Tensor& g, std::span<const double> u, std::span<const double> v) {
  const std::size_t cols = g.cols();
  if (u.size() != g.rows() || v.size() != cols) throw DimensionError("outer_acc");
  double* base = g.span().data();
  for (std::size_t r = 0; r < u.size(); ++r) {
    const double ur = u[r];
    if (ur == 0.0) continue;
    double* row = base + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += ur * v[c];
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionError("axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace kernels

Parameter::Parameter(std::string name_, Tensor value_, bool row_sparse_)
    : name(std::move(name_)),
      value(std::move(value_)),
      grad(value.shape()),
      row_sparse(row_sparse_) {
  if (row_sparse && value.rank() != 2) {
    throw DimensionError("row-sparse parameter " + name + " must be rank 2");
  }
  if (row_sparse) row_flag_.assign(value.rows(), 0);
}

void Parameter::mark_row(std::size_t r) {
  if (!row_sparse) return;
  if (row_flag_.size() != value.rows()) row_flag_.assign(value.rows(), 0);
  if (!row_flag_[r]) {
    row_flag_[r] = 1;
    touched_rows.push_back(r);
  }
}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  if (!row_sparse) {
    grad.fill(0.0);
    return;
  }
  for (std::size_t r : touched_rows) {
    auto row = grad.row(r);
    std::fill(row.begin(), row.end(), 0.0);
    row_flag_[r] = 0;
  }
  touched_rows.clear();
}

void Parameter::for_each_active(const std::function<void(std::size_t)>& fn) const {
  if (!row_sparse) {
    for (std::size_t i = 0; i < value.size(); ++i) fn(i);
    return;
  }
  const std::size_t w = row_width();
  for (std::size_t r : touched_rows) {
    for (std::size_t c = 0; c < w; ++c) fn(r * w + c);
  }
}

std::size_t count_elements(const ParameterList& params) {
  std::size_t n = 0;
  for (const Parameter* p : params) n += p->value.size();
  return n;
}

std::vector<Tensor> finite_diff_grad(const std::function<double()>& f,
                                     const ParameterList& params, double epsilon) {
  if (!(epsilon > 0.0)) throw ParameterError("finite-difference epsilon must be > 0");
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (Parameter* p : params) {
    Tensor g(p->value.shape());
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + epsilon;
      const double fp = f();
      p->value[i] = orig - epsilon;
      const double fm = f();
      p->value[i] = orig;
      g[i] = (fp - fm) / (2.0 * epsilon);
    }
    out.push_back(std::move(g));
  }
  return out;
}

void xavier_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.span()) v = rng.uniform(-a, a);
}

}  // namespace rankkit
