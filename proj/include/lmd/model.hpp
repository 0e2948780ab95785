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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lmd/tensor.hpp"

namespace lmd {

/// Identifies one of the M input modalities or the bias stream.
class ModalityId {
 public:
  static constexpr ModalityId modality(std::size_t index) { return ModalityId(index); }
  static constexpr ModalityId bias() { return ModalityId(kBias); }

  constexpr bool is_bias() const { return index_ == kBias; }
  constexpr std::size_t index() const { return index_; }

  /// Position inside an (M+1)-slot component array: modalities first, bias last.
  constexpr std::size_t slot(std::size_t modalities) const { return is_bias() ? modalities : index_; }

  constexpr bool operator==(const ModalityId&) const = default;

 private:
  static constexpr std::size_t kBias = static_cast<std::size_t>(-1);
  constexpr explicit ModalityId(std::size_t i) : index_(i) {}
  std::size_t index_;
};

/// Short label used in tables and report files: C, R, L for the first three
/// modalities (camera, radar, LiDAR), M<i> beyond, B for the bias stream.
std::string modality_label(ModalityId id);

enum class LayerKind {
  kInput,
  kDense,
  kConv2d,
  kBatchNorm,
  kLayerNorm,
  kInstanceNorm,
  kReLU,
  kGELU,
  kSoftmax,
  kConcatFusion,
  kResidualAdd,
  kMatMul,
};

std::string_view kind_name(LayerKind kind);
std::optional<LayerKind> kind_from_name(std::string_view name);

/// One node of the fusion graph. Only the fields relevant to `kind` are used:
///   Input         modality, input_shape
///   Dense         weight [out,in], bias [out]; acts on axis 0 of the input
///   Conv2d        weight [Co,Ci,kH,kW], bias [Co], conv
///   BatchNorm     mean, var, gamma, beta, eps (per channel, evaluation mode)
///   LayerNorm     gamma, beta, eps, axes (normalized axes; affine per axis-0 index)
///   InstanceNorm  gamma, beta, eps (normalizes every axis but 0)
///   Softmax       over the last axis
///   ConcatFusion  axis
///   MatMul        transpose_a, transpose_b; operands viewed as [extent0, rest]
struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::kInput;
  std::vector<std::string> inputs;

  std::size_t modality = 0;
  Shape input_shape;

  Tensor weight;
  Tensor bias;
  Conv2dParams conv;

  Tensor mean;
  Tensor var;
  Tensor gamma;
  Tensor beta;
  double eps = 1e-5;
  std::vector<std::size_t> axes;

  std::size_t axis = 0;
  bool transpose_a = false;
  bool transpose_b = false;

  bool operator==(const LayerSpec&) const;
};

inline bool operator==(const Conv2dParams& a, const Conv2dParams& b) {
  return a.stride == b.stride && a.padding == b.padding;
}

/// Topologically ordered, validated layer DAG. Immutable once constructed.
class ModelGraph {
 public:
  /// Validates the graph; throws ParseError naming the offending layer.
  ModelGraph(std::size_t modalities, std::vector<LayerSpec> layers, std::string output);

  std::size_t modalities() const { return modalities_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
  const std::string& output() const { return output_; }
  std::size_t output_index() const { return output_index_; }

  /// Layer position for an id; throws ParseError if unknown.
  std::size_t index_of(std::string_view id) const;
  /// Positions of the upstream layers of layer i.
  const std::vector<std::size_t>& upstream(std::size_t i) const { return upstream_.at(i); }
  /// Position of the Input layer feeding modality m.
  std::size_t input_layer(std::size_t modality) const { return input_layers_.at(modality); }
  const Shape& input_shape(std::size_t modality) const;

  bool operator==(const ModelGraph& other) const {
    return modalities_ == other.modalities_ && output_ == other.output_ && layers_ == other.layers_;
  }

 private:
  std::size_t modalities_;
  std::vector<LayerSpec> layers_;
  std::string output_;
  std::size_t output_index_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> upstream_;
  std::vector<std::size_t> input_layers_;
};

/// Per-modality input tensors, indexed by modality.
using ModalityInputs = std::vector<Tensor>;

/// Activation of every layer, aligned with ModelGraph::layers().
using Activations = std::vector<Tensor>;

/// Evaluates a single non-input layer on its upstream activations.
Tensor evaluate_layer(const LayerSpec& layer, std::span<const Tensor* const> inputs);

/// Exact-erf GELU.
double gelu(double x);

/// Plain forward pass. Throws ShapeError for missing or mis-shaped inputs.
Activations forward(const ModelGraph& model, const ModalityInputs& inputs);

/// Checks that `inputs` covers every modality with the declared shape.
void check_inputs(const ModelGraph& model, const ModalityInputs& inputs);

/// Output shape of a layer given its upstream shapes; used for validation.
Shape infer_shape(const LayerSpec& layer, const std::vector<Shape>& inputs);

}  // namespace lmd
