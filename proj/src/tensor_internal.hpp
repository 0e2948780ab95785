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
#include <vector>

#include "lmd/tensor.hpp"

namespace lmd::detail {

void check_conv_shapes(const Tensor& x, const Tensor& w, const Tensor& b);

/// Flat offsets describing a reduction over a subset of axes: element r of
/// group g lives at group_base[g] + reduced_offsets[r]. Both lists ascend.
struct ReductionPlan {
  Shape result_shape;
  std::vector<std::size_t> group_base;
  std::vector<std::size_t> reduced_offsets;
};

ReductionPlan plan_reduction(const Shape& shape, const std::vector<std::size_t>& axes);

}  // namespace lmd::detail
