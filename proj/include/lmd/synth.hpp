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

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lmd/model.hpp"

namespace lmd {

/// Shape of a generated fusion network.
///
/// Layout, in order:
///   per modality m   Input -> Conv2d 3x3 [-> norm0] [-> act0]
///   fusion           ConcatFusion -> Conv2d 1x1 ("Concat & Conv")
///   trunk block b    (Conv2d 3x3 if b even, Dense if b odd) [-> norm_b] [-> act_b]
///   residual         ResidualAdd(fusion conv, last block)
///   attention        Dense q, Dense k, Dense v, MatMul(q, k^T), Softmax, MatMul(attn, v)
///   head             Conv2d 1x1 -> 1 channel
/// Branches always use BatchNorm/ReLU when `norms`/`activations` are
/// non-empty; trunk blocks cycle through the lists. Empty lists drop the
/// corresponding layers, which yields a purely affine model.
///
/// Layer count, with n = !norms.empty(), a = !activations.empty():
///   M*(2 + n + a) + 2 + depth*(1 + n + a) + 1 + 6*attention + 1
/// e.g. M=2, depth=1, defaults: 8 + 2 + 3 + 1 + 1 = 15.
struct SyntheticSpec {
  std::size_t modalities = 2;
  std::size_t depth = 3;
  std::size_t grid = 32;
  std::size_t input_channels = 2;
  std::size_t branch_channels = 4;
  std::size_t trunk_channels = 8;
  std::vector<LayerKind> norms{LayerKind::kBatchNorm, LayerKind::kLayerNorm, LayerKind::kInstanceNorm};
  std::vector<LayerKind> activations{LayerKind::kReLU, LayerKind::kGELU};
  bool include_attention = false;
  /// When false every Dense/Conv2d bias is zero.
  bool layer_bias = true;
};

std::size_t synthetic_layer_count(const SyntheticSpec& spec);

/// Deterministic for a given seed. Throws ConfigError on an invalid spec.
ModelGraph gen_synthetic_model(std::uint64_t seed, const SyntheticSpec& spec);

struct SampleSet {
  std::size_t modalities = 0;
  /// samples[k][m] is modality m of sample k.
  std::vector<ModalityInputs> samples;

  std::size_t size() const { return samples.size(); }
  bool operator==(const SampleSet&) const = default;
};

/// N samples shaped for `model`. Each modality channel is a sum of a few
/// seeded Gaussian blobs with signed amplitudes; every (sample, modality)
/// pair draws from its own stream, so distinct samples are independent.
SampleSet gen_sample_set(std::uint64_t seed, const ModelGraph& model, std::size_t n);

}  // namespace lmd
