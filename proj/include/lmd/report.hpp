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

// JSON documents written by the command-line tool. Every writer has a
// matching reader that restores the same structure.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lmd/baselines.hpp"
#include "lmd/decomposition.hpp"
#include "lmd/metrics.hpp"

namespace lmd {

struct LayerResidual {
  std::string id;
  double residual = 0.0;
  bool operator==(const LayerResidual&) const = default;
};

struct DecompositionReport {
  std::string variant;
  std::size_t sample_index = 0;
  double epsilon = 0.0;
  /// Final-layer components, modalities first, bias last.
  DecomposedTensor output;
  std::vector<LayerResidual> layers;
  double max_equality_residual = 0.0;
  std::string worst_layer;
  /// Neurons whose chord slope was clamped, over all layers.
  std::size_t clamped = 0;

  bool operator==(const DecompositionReport&) const = default;
};

DecompositionReport make_decomposition_report(const ModelGraph& model, const Decomposition& dec,
                                              const SplitConfig& cfg, std::size_t sample_index);

std::string decomposition_to_json(const DecompositionReport& r);
DecompositionReport decomposition_from_json(std::string_view doc);

std::string separation_to_json(const std::vector<SeparationReport>& reports);
std::vector<SeparationReport> separation_from_json(std::string_view doc);

std::string attribution_to_json(const Attribution& a, const std::string& method);
Attribution attribution_from_json(std::string_view doc, std::string* method = nullptr);

}  // namespace lmd
