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

// Per-layer linearized rules. Each maps the decomposition of a layer's
// input(s) to the decomposition of its output; the sum over components of
// the result equals the layer's recorded output whenever the input sums
// equal the recorded inputs.

#pragma once

#include <span>

#include "lmd/decomposition.hpp"

namespace lmd {

/// Input layer of modality m: component m = x, every other component zero.
DecomposedTensor split_input(std::size_t modalities, std::size_t m, const Tensor& x);

/// One decomposition per modality's Input layer, indexed by modality.
std::vector<DecomposedTensor> split_fusion_inputs(const ModelGraph& model, const ModalityInputs& inputs);

/// Dense/Conv2d: W h_m for modalities, W h_b + b for the bias stream.
DecomposedTensor lin_affine(const LayerSpec& layer, const DecomposedTensor& d);

DecomposedTensor lin_concat(const LayerSpec& layer, std::span<const DecomposedTensor* const> parts);
DecomposedTensor lin_residual_add(const DecomposedTensor& a, const DecomposedTensor& b);

/// ReLU/GELU. act_rule none scales every component by the recorded slope;
/// sum and ratio first move the bias entry into a modality at neurons whose
/// component signs match the rule's conditions (two modalities only).
DecomposedTensor lin_activation(const LayerRecord& rec, const DecomposedTensor& d, const SplitConfig& cfg);

/// Evaluation-mode BatchNorm: every component scaled by gamma/sqrt(var+eps);
/// the constant beta - mean*scale goes to the bias stream (identity) or is
/// shared equally by all M+1 components (uniform).
DecomposedTensor lin_batchnorm(const LayerSpec& layer, const DecomposedTensor& d, const SplitConfig& cfg);

/// LayerNorm with the recorded variance held fixed; see LnRule/LnStats.
DecomposedTensor lin_layernorm(const LayerSpec& layer, const DecomposedTensor& d, const LayerRecord& rec,
                               const SplitConfig& cfg);

/// InstanceNorm: per-channel centring of each component with the recorded
/// per-channel variance; beta goes to the bias stream.
DecomposedTensor lin_instancenorm(const LayerSpec& layer, const DecomposedTensor& d, const LayerRecord& rec);

DecomposedTensor lin_softmax(const LayerRecord& rec, const DecomposedTensor& d);

/// Bilinear product: A_m B_m stays with modality m; every cross term and
/// every term with a bias operand goes to the bias stream.
DecomposedTensor lin_matmul(const LayerSpec& layer, const DecomposedTensor& a, const DecomposedTensor& b);

/// Dispatches on the layer kind. `inputs` are the decompositions of the
/// layer's upstream layers, in order.
DecomposedTensor linearized_layer(const LayerSpec& layer, const LayerRecord& rec,
                                  std::span<const DecomposedTensor* const> inputs, const SplitConfig& cfg);

}  // namespace lmd
