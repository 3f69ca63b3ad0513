// Copyright 2026 The tatt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "tatt/attention.h"
#include "tatt/jl.h"
#include "tatt/random.h"
#include "tatt/tensor_ops.h"

namespace {

constexpr std::size_t kFeatureDim = 16;

void BM_FullAttention(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  tatt::Engine eng = tatt::MakeEngine(1, {n});
  const tatt::Tensor q = tatt::RandomNormal({n, kFeatureDim}, eng);
  const tatt::Tensor k = tatt::RandomNormal({n, kFeatureDim}, eng);
  const tatt::Tensor v = tatt::RandomNormal({n, kFeatureDim}, eng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tatt::FullAttention(q, k, v));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FullAttention)
    ->RangeMultiplier(2)
    ->Range(256, 8192)
    ->Unit(benchmark::kMillisecond)
    ->Complexity();

void BM_TensorizedAttention(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const tatt::TensorizationScheme scheme(tatt::BalancedDims(n), kFeatureDim);
  tatt::Engine eng = tatt::MakeEngine(1, {n});
  const tatt::Tensor q = tatt::RandomNormal(scheme.tensor_shape(), eng);
  const tatt::Tensor k = tatt::RandomNormal(scheme.tensor_shape(), eng);
  const tatt::Tensor v = tatt::RandomNormal(scheme.tensor_shape(), eng);
  const tatt::DimMask masks = tatt::DimMask::None(scheme.order());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        tatt::TensorizedAttentionForward(q, k, v, scheme, masks).output);
  }
  state.SetComplexityN(state.range(0));
  state.SetLabel(scheme.ToString());
}
BENCHMARK(BM_TensorizedAttention)
    ->RangeMultiplier(2)
    ->Range(256, 65536)
    ->Unit(benchmark::kMillisecond)
    ->Complexity();

void BM_TensorizedBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const tatt::TensorizationScheme scheme(tatt::BalancedDims(n), kFeatureDim);
  tatt::Engine eng = tatt::MakeEngine(2, {n});
  const tatt::Tensor q = tatt::RandomNormal(scheme.tensor_shape(), eng);
  const tatt::Tensor k = tatt::RandomNormal(scheme.tensor_shape(), eng);
  const tatt::Tensor v = tatt::RandomNormal(scheme.tensor_shape(), eng);
  const tatt::Tensor d_out = tatt::RandomNormal(scheme.tensor_shape(), eng);
  const tatt::DimMask masks = tatt::DimMask::HierarchicalCausal(scheme);
  const auto fwd = tatt::TensorizedAttentionForward(q, k, v, scheme, masks);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tatt::TensorizedAttentionBackward(
        d_out, q, k, v, fwd.intermediates, scheme, masks));
  }
  state.SetLabel(scheme.ToString());
}
BENCHMARK(BM_TensorizedBackward)
    ->RangeMultiplier(4)
    ->Range(256, 16384)
    ->Unit(benchmark::kMillisecond);

void BM_ProjectionRowInner(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto proj = tatt::BuildProjection(64, {side, side}, 1, 3);
  tatt::Engine eng = tatt::MakeEngine(3, {side});
  const tatt::Tensor y = tatt::RandomNormal({side * side}, eng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(proj.Apply(y.data()));
  }
}
BENCHMARK(BM_ProjectionRowInner)->RangeMultiplier(2)->Range(8, 64);

}  // namespace

BENCHMARK_MAIN();
