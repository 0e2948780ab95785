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

#include "lmd/decomposition.hpp"

#include <algorithm>
#include <cmath>

#include "lmd/error.hpp"
#include "lmd/rules.hpp"
#include "model_internal.hpp"

namespace lmd {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::pair<E, std::string_view> (&table)[N], const char* what) {
  for (const auto& [value, name] : table)
    if (name == s) return value;
  throw ConfigError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_name(E v, const std::pair<E, std::string_view> (&table)[N]) {
  for (const auto& [value, name] : table)
    if (value == v) return name;
  return "?";
}

constexpr std::pair<BnRule, std::string_view> kBn[] = {{BnRule::kIdentity, "identity"}, {BnRule::kUniform, "uniform"}};
constexpr std::pair<LnRule, std::string_view> kLn[] = {
    {LnRule::kRatio, "ratio"}, {LnRule::kIdentity, "identity"}, {LnRule::kUniform, "uniform"}};
constexpr std::pair<ActRule, std::string_view> kAct[] = {
    {ActRule::kNone, "none"}, {ActRule::kSum, "sum"}, {ActRule::kRatio, "ratio"}};

}  // namespace

std::string_view to_string(BnRule r) { return enum_name(r, kBn); }
std::string_view to_string(LnRule r) { return enum_name(r, kLn); }
std::string_view to_string(ActRule r) { return enum_name(r, kAct); }
BnRule parse_bn_rule(std::string_view s) { return parse_enum(s, kBn, "BatchNorm rule"); }
LnRule parse_ln_rule(std::string_view s) { return parse_enum(s, kLn, "LayerNorm rule"); }
ActRule parse_act_rule(std::string_view s) { return parse_enum(s, kAct, "activation rule"); }

SplitConfig SplitConfig::make(BnRule bn, LnRule ln, ActRule act, double epsilon) {
  SplitConfig c;
  c.bn_rule = bn;
  c.ln_rule = ln;
  c.ln_stats = ln == LnRule::kRatio ? LnStats::kLiveMean : LnStats::kBnLike;
  c.act_rule = act;
  c.epsilon = epsilon;
  return c;
}

SplitConfig SplitConfig::parse(std::string_view name, double epsilon) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto dash = name.find('-', start);
    parts.push_back(name.substr(start, dash == std::string_view::npos ? std::string_view::npos : dash - start));
    if (dash == std::string_view::npos) break;
    start = dash + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) {
    throw ConfigError("variant '" + std::string(name) + "' must look like <bn>-<ln>[-<act>]");
  }
  return make(parse_bn_rule(parts[0]), parse_ln_rule(parts[1]),
              parts.size() == 3 ? parse_act_rule(parts[2]) : ActRule::kNone, epsilon);
}

std::string SplitConfig::name() const {
  std::string s = std::string(to_string(bn_rule)) + "-" + std::string(to_string(ln_rule));
  if (act_rule != ActRule::kNone) s += "-" + std::string(to_string(act_rule));
  return s;
}

void SplitConfig::validate(std::size_t modalities) const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be a positive finite number");
  if (ln_rule == LnRule::kRatio && ln_stats != LnStats::kLiveMean) {
    throw ConfigError("the LayerNorm ratio rule centres with live component means");
  }
  if (ln_rule != LnRule::kRatio && ln_stats != LnStats::kBnLike) {
    throw ConfigError("LayerNorm identity/uniform rules need stored (bn-like) statistics");
  }
  if (act_rule != ActRule::kNone && modalities != 2) {
    throw ConfigError("activation rule '" + std::string(to_string(act_rule)) +
                      "' is defined for exactly two modalities, model has " + std::to_string(modalities));
  }
}

std::vector<SplitConfig> all_split_configs(double epsilon) {
  std::vector<SplitConfig> out;
  for (auto bn : {BnRule::kIdentity, BnRule::kUniform})
    for (auto ln : {LnRule::kRatio, LnRule::kIdentity, LnRule::kUniform})
      for (auto act : {ActRule::kNone, ActRule::kSum, ActRule::kRatio}) out.push_back(SplitConfig::make(bn, ln, act, epsilon));
  return out;
}

DecomposedTensor::DecomposedTensor(std::vector<Tensor> components) : components_(std::move(components)) {
  if (components_.size() < 2) throw ShapeError("a decomposition needs at least one modality and the bias stream");
  for (const auto& c : components_) {
    if (c.shape() != components_.front().shape()) {
      throw ShapeError("decomposition components differ in shape: " + shape_string(c.shape()) + " vs " +
                       shape_string(components_.front().shape()));
    }
  }
}

DecomposedTensor DecomposedTensor::zeros(std::size_t modalities, const Shape& shape) {
  return DecomposedTensor(std::vector<Tensor>(modalities + 1, Tensor(shape)));
}

Tensor DecomposedTensor::sum() const {
  Tensor s = components_.front();
  for (std::size_t i = 1; i < components_.size(); ++i) add_inplace(s, components_[i]);
  return s;
}

ChordSlope chord_slope(double pre, double post, double epsilon) {
  // Degenerate denominators: either the input is within 10 eps of zero while
  // the output is not (softmax at zero logits), or pre + eps itself vanishes.
  // The slope is then zero and the whole output becomes the residual.
  const double tiny = 10.0 * epsilon;
  const bool degenerate = std::fabs(pre) <= tiny && (std::fabs(post) > tiny || std::fabs(pre + epsilon) <= 0.5 * epsilon);
  double ratio = degenerate ? 0.0 : post / (pre + epsilon);
  if (!std::isfinite(ratio)) ratio = 0.0;
  return {ratio, post - ratio * pre, degenerate};
}

RecordedState record(const ModelGraph& model, const ModalityInputs& inputs, double epsilon) {
  check_inputs(model, inputs);
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  std::vector<LayerRecord> recs(model.layers().size());
  std::vector<const Tensor*> args;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const LayerSpec& l = model.layer(i);
    LayerRecord& rec = recs[i];
    if (l.kind == LayerKind::kInput) {
      rec.activation = inputs[l.modality];
    } else {
      args.clear();
      for (auto u : model.upstream(i)) args.push_back(&recs[u].activation);
      rec.activation = evaluate_layer(l, args);
    }
    if (!all_finite(rec.activation)) throw NumericError(l.id, "non-finite activation in record pass");

    switch (l.kind) {
      case LayerKind::kReLU:
      case LayerKind::kGELU:
      case LayerKind::kSoftmax: {
        const Tensor& pre = *args[0];
        rec.ratio = Tensor(pre.shape());
        rec.ratio_residual = Tensor(pre.shape());
        for (std::size_t j = 0; j < pre.numel(); ++j) {
          const ChordSlope s = chord_slope(pre[j], rec.activation[j], epsilon);
          rec.ratio[j] = s.ratio;
          rec.ratio_residual[j] = s.residual;
          rec.clamped += s.clamped ? 1 : 0;
        }
        break;
      }
      case LayerKind::kLayerNorm:
      case LayerKind::kInstanceNorm: {
        Moments m = moments(*args[0], detail::norm_axes(l, args[0]->rank()));
        rec.stat_mean = std::move(m.mean);
        rec.stat_var = std::move(m.variance);
        break;
      }
      default:
        break;
    }
  }
  return RecordedState(std::move(recs), epsilon);
}

std::vector<DecomposedTensor> propagate(const ModelGraph& model, const RecordedState& state,
                                        const ModalityInputs& inputs, const SplitConfig& cfg) {
  check_inputs(model, inputs);
  cfg.validate(model.modalities());
  if (state.layers().size() != model.layers().size()) throw ConfigError("recorded state does not belong to this model");
  std::vector<DecomposedTensor> out(model.layers().size());
  std::vector<const DecomposedTensor*> args;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const LayerSpec& l = model.layer(i);
    if (l.kind == LayerKind::kInput) {
      out[i] = split_input(model.modalities(), l.modality, inputs[l.modality]);
      continue;
    }
    args.clear();
    for (auto u : model.upstream(i)) args.push_back(&out[u]);
    out[i] = linearized_layer(l, state.layer(i), args, cfg);
  }
  return out;
}

double equality_residual(const DecomposedTensor& d, const Tensor& activation) {
  const Tensor diff = sub(d.sum(), activation);
  return max_abs(diff) / (1.0 + max_abs(activation));
}

Decomposition decompose(const ModelGraph& model, const ModalityInputs& inputs, const SplitConfig& cfg) {
  cfg.validate(model.modalities());
  RecordedState state = record(model, inputs, cfg.epsilon);
  std::vector<DecomposedTensor> layers = propagate(model, state, inputs, cfg);
  Decomposition dec{std::move(state), std::move(layers), {}, 0.0, 0};
  dec.residuals.reserve(dec.layers.size());
  for (std::size_t i = 0; i < dec.layers.size(); ++i) {
    const double r = equality_residual(dec.layers[i], dec.state.activation(i));
    dec.residuals.push_back(r);
    if (r > dec.max_residual || std::isnan(r)) {
      dec.max_residual = r;
      dec.worst_layer = i;
    }
  }
  return dec;
}

}  // namespace lmd
