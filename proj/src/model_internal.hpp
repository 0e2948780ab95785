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

#include <vector>

#include "lmd/model.hpp"

namespace lmd::detail {

// Axis bookkeeping for normalization layers.
struct ReductionView {
  Shape shape;
  std::vector<bool> reduced;
  std::vector<std::size_t> stride;
  std::size_t channel_stride = 1;
};

std::vector<std::size_t> norm_axes(const LayerSpec& l, std::size_t rank);
ReductionView make_view(const Shape& shape, const std::vector<std::size_t>& axes);
/// Index into the moments() result for a flat element position.
std::size_t group_of(const ReductionView& v, std::size_t flat);

// Affine kernels with the layer constant optional, shared by the plain
// forward pass and the linearized rules.
Tensor dense(const LayerSpec& l, const Tensor& x, bool with_bias);
Tensor conv(const LayerSpec& l, const Tensor& x, bool with_bias);
Tensor matmul_layer(const LayerSpec& l, const Tensor& a, const Tensor& b);
Shape matmul_output_shape(const LayerSpec& l, const Shape& a, const Shape& b);

}  // namespace lmd::detail
