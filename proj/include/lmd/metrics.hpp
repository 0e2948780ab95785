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
#include <functional>
#include <string>
#include <vector>

#include "lmd/decomposition.hpp"
#include "lmd/synth.hpp"

namespace lmd {

struct PearsonResult {
  double value = 0.0;
  /// Either argument had zero variance; value is then 0 by convention.
  bool degenerate = false;
};

/// Pearson correlation of the flattened tensors. Needs equal shapes and at
/// least two elements.
PearsonResult pearson(const Tensor& a, const Tensor& b);

/// Mean of squared elementwise differences.
double mse(const Tensor& a, const Tensor& b);

/// Modality-replacement protocol settings. Sample k is compared against
/// sample (k + stride*m) mod N for m = 1..count.
struct MetricConfig {
  std::size_t offset_stride = 1;
  std::size_t offset_count = 4;
  /// Modality sets replaced together. Empty: each modality on its own.
  std::vector<std::vector<std::size_t>> perturb_sets;
  /// Use only the first `sample_limit` samples as anchors (0 = all).
  std::size_t sample_limit = 0;
  /// Correlate the positive parts of the maps instead of raw signed values.
  bool positive_part = false;
  /// Overrides stride/count when non-empty. Offset 0 (self-replacement) is
  /// only accepted here, for identity checks.
  std::vector<std::size_t> explicit_offsets;

  /// Defaults scaled to N samples: stride ~ N*500/6019,
  /// up to 12 offsets, each hitting a distinct sample.
  static MetricConfig defaults_for(std::size_t n);

  std::vector<std::size_t> offsets() const;
  /// Throws ConfigError when offsets collide or wrap onto the anchor.
  void validate(std::size_t n, std::size_t modalities) const;
};

/// Every modality pair, for joint-perturbation cells.
std::vector<std::vector<std::size_t>> all_pairs(std::size_t modalities);

struct SeparationCell {
  std::vector<std::size_t> perturbed;
  std::size_t observed = 0;
  /// e.g. "R_p/C" or "R_pL_p/C".
  std::string label;
  double pcc_mean = 0.0;
  double pcc_std = 0.0;
  double mse_mean = 0.0;
  double mse_std = 0.0;
  /// Comparisons aggregated in the MSE statistics.
  std::size_t n = 0;
  /// Zero-variance Pearson comparisons, excluded from the PCC statistics.
  std::size_t n_degenerate = 0;

  bool operator==(const SeparationCell&) const = default;
};

struct SeparationReport {
  std::string variant;
  std::size_t anchors = 0;
  std::vector<std::size_t> offsets;
  std::vector<SeparationCell> cells;

  const SeparationCell& cell(const std::vector<std::size_t>& perturbed, std::size_t observed) const;
  bool operator==(const SeparationReport&) const = default;
};

std::string cell_label(const std::vector<std::size_t>& perturbed, std::size_t observed);

/// Per-modality maps produced by an attribution method for one input.
/// `anchor` is the unperturbed sample index the call belongs to.
using AttributionFn = std::function<std::vector<Tensor>(const ModalityInputs& inputs, std::size_t anchor)>;

/// Generic replacement protocol: for every anchor and offset, replace the
/// perturbed modalities and score each modality's map against its clean
/// version. Anchors run in parallel; the reduction order is fixed, and
/// offsets are visited in ascending order whatever order they were given in.
SeparationReport replacement_protocol(const SampleSet& samples, std::size_t modalities, const MetricConfig& mcfg,
                                      const std::string& variant, const AttributionFn& attribute);

/// Record pass on the first `anchors` samples, in parallel.
std::vector<RecordedState> record_samples(const ModelGraph& model, const SampleSet& samples, std::size_t anchors,
                                          double epsilon);

/// LMD separation metrics: the linearization is recorded once per clean
/// sample and reused for every replaced input.
SeparationReport perturbation_protocol(const ModelGraph& model, const SampleSet& samples, const SplitConfig& cfg,
                                       const MetricConfig& mcfg);

/// One report per variant over identical samples and offsets.
std::vector<SeparationReport> variant_matrix(const ModelGraph& model, const SampleSet& samples,
                                             const std::vector<SplitConfig>& variants, const MetricConfig& mcfg);

/// Aligned plain-text table, one block per report.
std::string format_table(const std::vector<SeparationReport>& reports);

}  // namespace lmd
