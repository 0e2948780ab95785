// Copyright 2026 The LMD Authors.
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

// Serial reference kernels against the OpenMP ones, plus one end-to-end
// decomposition. Thread count for the parallel side comes from LMD_THREADS.

#include <benchmark/benchmark.h>

#include "lmd/decomposition.hpp"
#include "lmd/parallel.hpp"
#include "lmd/rng.hpp"
#include "lmd/synth.hpp"
#include "lmd/tensor.hpp"

namespace {

lmd::Tensor random_tensor(lmd::Shape shape, std::uint64_t seed) {
  lmd::Rng rng(seed);
  lmd::Tensor t(std::move(shape));
  for (auto& v : t.mutable_data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_MatmulSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const lmd::Tensor a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(lmd::reference::matmul(a, b));
}

void BM_MatmulParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const lmd::Tensor a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(lmd::matmul(a, b));
}

// 8 -> 8 channels, 3x3 kernel, padding 1, on an n x n grid.
void BM_Conv2dSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const lmd::Tensor x = random_tensor({8, n, n}, 3), w = random_tensor({8, 8, 3, 3}, 4), b = random_tensor({8}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(lmd::reference::conv2d(x, w, b, {1, 1}));
}

void BM_Conv2dParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const lmd::Tensor x = random_tensor({8, n, n}, 3), w = random_tensor({8, 8, 3, 3}, 4), b = random_tensor({8}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(lmd::conv2d(x, w, b, {1, 1}));
}

// Per-channel moments, as used by InstanceNorm.
void BM_MomentsSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const lmd::Tensor x = random_tensor({16, n, n}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(lmd::reference::moments(x, {1, 2}));
}

void BM_MomentsParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const lmd::Tensor x = random_tensor({16, n, n}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(lmd::moments(x, {1, 2}));
}

void BM_Decompose(benchmark::State& state) {
  lmd::SyntheticSpec spec;
  spec.grid = static_cast<std::size_t>(state.range(0));
  const lmd::ModelGraph m = lmd::gen_synthetic_model(0, spec);
  const lmd::SampleSet s = lmd::gen_sample_set(1, m, 1);
  for (auto _ : state) benchmark::DoNotOptimize(lmd::decompose(m, s.samples[0], lmd::SplitConfig{}));
}

BENCHMARK(BM_MatmulSerial)->Arg(64)->Arg(256);
BENCHMARK(BM_MatmulParallel)->Arg(64)->Arg(256);
BENCHMARK(BM_Conv2dSerial)->Arg(32)->Arg(128);
BENCHMARK(BM_Conv2dParallel)->Arg(32)->Arg(128);
BENCHMARK(BM_MomentsSerial)->Arg(32)->Arg(128);
BENCHMARK(BM_MomentsParallel)->Arg(32)->Arg(128);
BENCHMARK(BM_Decompose)->Arg(16)->Arg(32);

}  // namespace

int main(int argc, char** argv) {
  if (!lmd::configure_threads_from_env()) return 2;
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
