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

// Modality-level Shapley attribution and the LMD + Shapley hybrid.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lmd/decomposition.hpp"
#include "lmd/metrics.hpp"

namespace lmd {

inline constexpr std::size_t kMaxShapleyModalities = 12;

struct Attribution {
  /// One map per modality, each shaped like the model output.
  std::vector<Tensor> per_modality;
  Tensor base;
  /// Value of the full coalition; base + sum(per_modality) reproduces it.
  Tensor full;
  /// Coalition values actually evaluated (2^M).
  std::size_t coalition_evaluations = 0;
  /// ||base + sum_m per_modality[m] - full||_inf / (1 + ||full||_inf).
  double efficiency_residual = 0.0;

  bool operator==(const Attribution&) const = default;
};

/// Exact Shapley values of v(S) = original model with modalities outside S
/// zeroed. base = v(empty).
Attribution shapley(const ModelGraph& model, const ModalityInputs& inputs);

/// How lmd_shap hands the bias component to the modalities.
enum class Redistribution {
  /// Shapley values of the linearized game where the bias stream only
  /// enters the full coalition.
  kShapley,
  /// Elementwise shares proportional to |h_m|.
  kProportional,
};

std::string_view to_string(Redistribution r);

/// Linearizes at the clean inputs, then redistributes the bias component.
Attribution lmd_shap(const ModelGraph& model, const ModalityInputs& inputs, const SplitConfig& cfg,
                     Redistribution how = Redistribution::kShapley);

/// Same, reusing a recorded linearization (possibly from other inputs).
Attribution lmd_shap(const ModelGraph& model, const RecordedState& state, const ModalityInputs& inputs,
                     const SplitConfig& cfg, Redistribution how = Redistribution::kShapley);

/// Replacement protocol scored on plain Shapley attributions.
SeparationReport shapley_protocol(const ModelGraph& model, const SampleSet& samples, const MetricConfig& mcfg);

/// Replacement protocol scored on lmd_shap attributions; the linearization
/// is recorded once per clean anchor, as for LMD itself.
SeparationReport lmd_shap_protocol(const ModelGraph& model, const SampleSet& samples, const SplitConfig& cfg,
                                   const MetricConfig& mcfg, Redistribution how = Redistribution::kShapley);

}  // namespace lmd
