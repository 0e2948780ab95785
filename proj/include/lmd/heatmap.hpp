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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lmd/tensor.hpp"

namespace lmd {

enum class HeatmapEncoding { kSignedCsv, kPositivePgm };

enum class HeatmapNorm {
  /// Positive part divided by its maximum.
  kMaxPositive,
  /// x / max|x| mapped linearly so that zero sits mid-range.
  kSignedSymmetric,
  /// Logistic function of the raw value.
  kSigmoid,
};

HeatmapEncoding parse_heatmap_encoding(std::string_view s);
HeatmapNorm parse_heatmap_norm(std::string_view s);
std::string_view to_string(HeatmapEncoding e);
std::string_view to_string(HeatmapNorm n);

/// Views a component as rows x cols. Rank 1 becomes one row; rank >= 3
/// stacks the leading planes vertically.
Tensor as_map2d(const Tensor& t);

/// Maps every value into [0, 255].
std::vector<std::uint8_t> normalize_to_bytes(const Tensor& map, HeatmapNorm norm);

/// Binary PGM ("P5", maxval 255) of a 2D map.
std::string to_pgm(const Tensor& map2d, HeatmapNorm norm);

/// One line per row, values printed with 17 significant digits so they
/// parse back to the same doubles.
std::string to_csv(const Tensor& map2d);
Tensor parse_csv(std::string_view text);

}  // namespace lmd
