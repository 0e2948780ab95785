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

// Layer-wise modality decomposition.
//
// A record pass runs the original network once on the full multimodal input
// and caches what is needed to replace every non-linear layer by a linear
// surrogate: chord slopes for activations and softmax, normalization
// statistics for LayerNorm/InstanceNorm. The linearized network is then
// evaluated on M+1 component streams (one per modality plus a bias stream)
// whose sum reproduces the recorded activation of every layer.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "lmd/model.hpp"

namespace lmd {

enum class BnRule { kIdentity, kUniform };
enum class LnRule { kRatio, kIdentity, kUniform };
/// kLiveMean: each component is centred with its own mean (ratio rule).
/// kBnLike: recorded mean and variance are used as fixed BatchNorm statistics.
enum class LnStats { kLiveMean, kBnLike };
enum class ActRule { kNone, kSum, kRatio };

/// Bias-splitting rule selection.
struct SplitConfig {
  BnRule bn_rule = BnRule::kIdentity;
  LnRule ln_rule = LnRule::kRatio;
  LnStats ln_stats = LnStats::kLiveMean;
  ActRule act_rule = ActRule::kNone;
  double epsilon = 1e-6;

  /// Picks the statistics mode implied by the LayerNorm rule.
  static SplitConfig make(BnRule bn, LnRule ln, ActRule act = ActRule::kNone, double epsilon = 1e-6);

  /// Parses "<bn>-<ln>[-<act>]", e.g. "identity-ratio" or "uniform-identity-sum".
  static SplitConfig parse(std::string_view name, double epsilon = 1e-6);

  /// "<bn>-<ln>" plus "-<act>" when act_rule is not none.
  std::string name() const;

  /// Throws ConfigError for inconsistent settings or sum/ratio rules with M != 2.
  void validate(std::size_t modalities) const;

  bool operator==(const SplitConfig&) const = default;
};

std::string_view to_string(BnRule r);
std::string_view to_string(LnRule r);
std::string_view to_string(ActRule r);
BnRule parse_bn_rule(std::string_view s);
LnRule parse_ln_rule(std::string_view s);
ActRule parse_act_rule(std::string_view s);

/// Every {identity, uniform} x {ratio, identity, uniform} x {none, sum, ratio} combination.
std::vector<SplitConfig> all_split_configs(double epsilon = 1e-6);

/// M modality components plus a bias component, all of one shape.
class DecomposedTensor {
 public:
  DecomposedTensor() = default;
  /// `components` holds the M modalities followed by the bias stream.
  explicit DecomposedTensor(std::vector<Tensor> components);

  static DecomposedTensor zeros(std::size_t modalities, const Shape& shape);

  std::size_t modalities() const { return components_.size() - 1; }
  std::size_t size() const { return components_.size(); }
  const Shape& shape() const { return components_.front().shape(); }

  const Tensor& operator[](ModalityId id) const { return components_.at(id.slot(modalities())); }
  Tensor& operator[](ModalityId id) { return components_.at(id.slot(modalities())); }
  const Tensor& slot(std::size_t s) const { return components_.at(s); }
  Tensor& slot(std::size_t s) { return components_.at(s); }
  const Tensor& bias() const { return components_.back(); }
  Tensor& bias() { return components_.back(); }
  const std::vector<Tensor>& components() const { return components_; }

  /// Elementwise sum of all components.
  Tensor sum() const;

  bool operator==(const DecomposedTensor&) const = default;

 private:
  std::vector<Tensor> components_;
};

/// What the record pass keeps for one layer.
struct LayerRecord {
  /// F^l: the layer's output on the recorded input.
  Tensor activation;
  /// Activation/softmax layers: chord slope c = F^l / (F^{l-1} + eps),
  /// clamped to 0 where the denominator is degenerate.
  Tensor ratio;
  /// Activation/softmax layers: F^l - c * F^{l-1}. Of order eps where the
  /// ratio is exact, the full output where it was clamped.
  Tensor ratio_residual;
  std::size_t clamped = 0;
  /// LayerNorm/InstanceNorm: mean and variance of the recorded input over
  /// the normalization axes, one entry per normalization group.
  Tensor stat_mean;
  Tensor stat_var;
};

/// Cache from the record pass. Immutable; safe to share across threads.
class RecordedState {
 public:
  RecordedState(std::vector<LayerRecord> layers, double epsilon)
      : layers_(std::move(layers)), epsilon_(epsilon) {}

  const std::vector<LayerRecord>& layers() const { return layers_; }
  const LayerRecord& layer(std::size_t i) const { return layers_.at(i); }
  const Tensor& activation(std::size_t i) const { return layers_.at(i).activation; }
  double epsilon() const { return epsilon_; }

 private:
  std::vector<LayerRecord> layers_;
  double epsilon_;
};

/// Chord slope and residual for one neuron; exposed for tests.
struct ChordSlope {
  double ratio;
  double residual;
  bool clamped;
};
ChordSlope chord_slope(double pre, double post, double epsilon);

/// One plain forward pass on the full input. Throws NumericError naming the
/// first layer that produces a non-finite value.
RecordedState record(const ModelGraph& model, const ModalityInputs& inputs, double epsilon = 1e-6);

/// Propagates the input decomposition through the network linearized at
/// `state`. Returns one DecomposedTensor per layer.
std::vector<DecomposedTensor> propagate(const ModelGraph& model, const RecordedState& state,
                                        const ModalityInputs& inputs, const SplitConfig& cfg);

/// ||sum(d) - activation||_inf / (1 + ||activation||_inf).
double equality_residual(const DecomposedTensor& d, const Tensor& activation);

struct Decomposition {
  RecordedState state;
  std::vector<DecomposedTensor> layers;
  /// Relative equality residual per layer.
  std::vector<double> residuals;
  double max_residual = 0.0;
  std::size_t worst_layer = 0;

  const DecomposedTensor& at(std::size_t i) const { return layers.at(i); }
};

/// record() followed by propagate(), with the equality residual of every layer.
Decomposition decompose(const ModelGraph& model, const ModalityInputs& inputs, const SplitConfig& cfg);

}  // namespace lmd
