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


#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "rankkit/bandit.hpp"
#include "rankkit/embeddings.hpp"
#include "rankkit/layers.hpp"
#include "rankkit/rng.hpp"
#include "rankkit/tensor.hpp"

namespace rankkit {
namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;
  return Tensor({rows, cols}, std::move(v));
}

Tensor random_vector(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;
  return Tensor::vector(v);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_matrix(n, n, rng), b = random_matrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

void BM_LowRankCross(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  LowRankCrossLayer layer("c", d, 8);
  layer.U.value = random_matrix(d, 8, rng);
  layer.V.value = random_matrix(d, 8, rng);
  const Tensor x0 = random_vector(d, rng), xl = random_vector(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(cross_forward(layer, x0, xl));
}
BENCHMARK(BM_LowRankCross)->Arg(32)->Arg(256);

void BM_AttentionCross(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  AttentionCrossLayer layer("a", d, 8);
  layer.init(rng);
  const Tensor x0 = random_vector(d, rng), xl = random_vector(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(attention_cross_forward(layer, x0, xl));
}
BENCHMARK(BM_AttentionCross)->Arg(32)->Arg(256);

void BM_QrLookup(benchmark::State& state) {
  const auto split = state.range(0) == 0 ? SplitMode::kSingle32 : SplitMode::kDual32;
  QRHashEmbedding e("e", 1000, 1000, 16, split);
  Rng rng(4);
  e.init(0.05, rng);
  std::vector<std::string> ids;
  for (int i = 0; i < 1024; ++i) ids.push_back("member_" + std::to_string(i));
  std::vector<double> out(16);
  std::size_t k = 0;
  for (auto _ : state) {
    e.lookup_acc(ids[k++ & 1023], out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_QrLookup)->Arg(0)->Arg(1);

void BM_QuantizeTable(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  const Tensor t = random_matrix(rows, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(quantize_table(t));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(rows * 64 * sizeof(double)));
}
BENCHMARK(BM_QuantizeTable)->Arg(1024)->Arg(16384);

void BM_PosteriorUpdate(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  std::vector<Tensor> z;
  std::vector<double> y;
  for (int i = 0; i < 64; ++i) {
    z.push_back(random_vector(dim, rng));
    y.push_back(rng.uniform() < 0.3 ? 1.0 : 0.0);
  }
  const Posterior prior = Posterior::prior(dim);
  for (auto _ : state) benchmark::DoNotOptimize(posterior_update(prior, z, y));
}
BENCHMARK(BM_PosteriorUpdate)->Arg(16)->Arg(64);

void BM_ThompsonSample(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  std::vector<Tensor> z;
  for (int i = 0; i < 32; ++i) z.push_back(random_vector(dim, rng));
  const Posterior p = posterior_update(Posterior::prior(dim), z, std::vector<double>(32, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(thompson_sample(p, rng));
}
BENCHMARK(BM_ThompsonSample)->Arg(16)->Arg(64);

}  // namespace
}  // namespace rankkit

BENCHMARK_MAIN();
