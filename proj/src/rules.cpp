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

#include "lmd/rules.hpp"

#include <cmath>

#include "lmd/error.hpp"
#include "model_internal.hpp"

namespace lmd {

namespace {

template <typename F>
DecomposedTensor map_components(const DecomposedTensor& d, F f) {
  std::vector<Tensor> out;
  out.reserve(d.size());
  for (std::size_t s = 0; s < d.size(); ++s) out.push_back(f(d.slot(s), s));
  return DecomposedTensor(std::move(out));
}

// Share of a layer constant assigned to slot s.
double delta(bool uniform, std::size_t slot, std::size_t slots) {
  if (uniform) return 1.0 / static_cast<double>(slots);
  return slot + 1 == slots ? 1.0 : 0.0;
}

void require_slope(const LayerRecord& rec, const DecomposedTensor& d) {
  if (rec.ratio.shape() != d.shape() || rec.ratio_residual.shape() != d.shape()) {
    throw ShapeError("recorded slope " + shape_string(rec.ratio.shape()) + " does not match component shape " +
                     shape_string(d.shape()));
  }
}

// Applies the recorded slope to every component and adds the recorded
// residual to the bias stream.
DecomposedTensor scale_by_slope(const LayerRecord& rec, const DecomposedTensor& d) {
  require_slope(rec, d);
  DecomposedTensor out = map_components(d, [&](const Tensor& t, std::size_t) { return hadamard(rec.ratio, t); });
  add_inplace(out.bias(), rec.ratio_residual);
  return out;
}

}  // namespace

DecomposedTensor split_input(std::size_t modalities, std::size_t m, const Tensor& x) {
  if (m >= modalities) throw ConfigError("modality index out of range");
  DecomposedTensor d = DecomposedTensor::zeros(modalities, x.shape());
  d[ModalityId::modality(m)] = x;
  return d;
}

std::vector<DecomposedTensor> split_fusion_inputs(const ModelGraph& model, const ModalityInputs& inputs) {
  check_inputs(model, inputs);
  std::vector<DecomposedTensor> out;
  for (std::size_t m = 0; m < model.modalities(); ++m) out.push_back(split_input(model.modalities(), m, inputs[m]));
  return out;
}

DecomposedTensor lin_affine(const LayerSpec& layer, const DecomposedTensor& d) {
  const std::size_t bias_slot = d.size() - 1;
  return map_components(d, [&](const Tensor& t, std::size_t s) {
    const bool with_bias = s == bias_slot;
    switch (layer.kind) {
      case LayerKind::kDense:
        return detail::dense(layer, t, with_bias);
      case LayerKind::kConv2d:
        return detail::conv(layer, t, with_bias);
      default:
        throw ConfigError("lin_affine: layer '" + layer.id + "' is not Dense or Conv2d");
    }
  });
}

DecomposedTensor lin_concat(const LayerSpec& layer, std::span<const DecomposedTensor* const> parts) {
  if (parts.empty()) throw ShapeError("lin_concat: no parts");
  const std::size_t slots = parts.front()->size();
  std::vector<Tensor> out;
  for (std::size_t s = 0; s < slots; ++s) {
    std::vector<Tensor> pieces;
    for (const auto* p : parts) {
      if (p->size() != slots) throw ShapeError("lin_concat: component count mismatch");
      pieces.push_back(p->slot(s));
    }
    out.push_back(concat(pieces, layer.axis));
  }
  return DecomposedTensor(std::move(out));
}

DecomposedTensor lin_residual_add(const DecomposedTensor& a, const DecomposedTensor& b) {
  if (a.size() != b.size()) throw ShapeError("lin_residual_add: component count mismatch");
  return map_components(a, [&](const Tensor& t, std::size_t s) { return add(t, b.slot(s)); });
}

DecomposedTensor lin_activation(const LayerRecord& rec, const DecomposedTensor& d, const SplitConfig& cfg) {
  cfg.validate(d.modalities());
  if (cfg.act_rule == ActRule::kNone) return scale_by_slope(rec, d);
  require_slope(rec, d);

  const Tensor& hc = d.slot(0);
  const Tensor& hr = d.slot(1);
  const Tensor& hb = d.slot(2);
  Tensor oc(d.shape()), orr(d.shape()), ob(d.shape());
  const double eps = cfg.epsilon;
  for (std::size_t j = 0; j < hc.numel(); ++j) {
    const double c = rec.ratio[j];
    const double res = rec.ratio_residual[j];
    const double xc = hc[j], xr = hr[j], xb = hb[j];
    // Share of the bias entry (and of the slope residual) moved into the
    // camera and radar components; both zero when no condition fires.
    double to_c = 0.0, to_r = 0.0;
    bool fired = false;
    if (cfg.act_rule == ActRule::kSum) {
      const bool cam = (xc < 0 && xr > 0 && xb < 0) || (xc > 0 && xr < 0 && xb > 0);
      const bool rad = (xc < 0 && xr > 0 && xb > 0) || (xc > 0 && xr < 0 && xb < 0);
      if (cam) {
        to_c = 1.0;
        fired = true;
      } else if (rad) {
        to_r = 1.0;
        fired = true;
      }
    } else {
      const bool same_sign = (xc > 0 && xr > 0 && xb > 0) || (xc < 0 && xr < 0 && xb < 0);
      const bool opposed_bias = (xc > 0 && xr > 0 && xb < 0) || (xc < 0 && xr < 0 && xb > 0);
      const double alpha = std::fabs(xr) / (std::fabs(xc) + std::fabs(xr) + eps);
      if (same_sign) {
        to_c = 1.0 - alpha;
        to_r = alpha;
        fired = true;
      } else if (opposed_bias) {
        to_c = alpha;
        to_r = 1.0 - alpha;
        fired = true;
      }
    }
    if (fired) {
      oc[j] = c * (xc + to_c * xb) + to_c * res;
      orr[j] = c * (xr + to_r * xb) + to_r * res;
      ob[j] = 0.0;
    } else {
      oc[j] = c * xc;
      orr[j] = c * xr;
      ob[j] = c * xb + res;
    }
  }
  return DecomposedTensor({std::move(oc), std::move(orr), std::move(ob)});
}

DecomposedTensor lin_batchnorm(const LayerSpec& layer, const DecomposedTensor& d, const SplitConfig& cfg) {
  const std::size_t channels = d.shape().at(0);
  const std::size_t per = shape_numel(d.shape()) / channels;
  const bool uniform = cfg.bn_rule == BnRule::kUniform;
  return map_components(d, [&](const Tensor& t, std::size_t s) {
    Tensor y(t.shape());
    const double share = delta(uniform, s, d.size());
    for (std::size_t c = 0; c < channels; ++c) {
      const double k = layer.gamma[c] / std::sqrt(layer.var[c] + layer.eps);
      const double constant = share * (layer.beta[c] - layer.mean[c] * k);
      for (std::size_t i = 0; i < per; ++i) y[c * per + i] = k * t[c * per + i] + constant;
    }
    return y;
  });
}

namespace {

// Shared by LayerNorm and InstanceNorm. With `centre` each component is
// centred by its own mean over the normalization group; otherwise the
// recorded mean enters through the constant term.
DecomposedTensor normalize_components(const LayerSpec& layer, const DecomposedTensor& d, const LayerRecord& rec,
                                      bool centre, bool uniform) {
  const auto axes = detail::norm_axes(layer, d.shape().size());
  const auto view = detail::make_view(d.shape(), axes);
  if (rec.stat_var.empty()) throw ConfigError("layer '" + layer.id + "' has no recorded statistics");
  return map_components(d, [&](const Tensor& t, std::size_t s) {
    Tensor mean;
    if (centre) mean = moments(t, axes).mean;
    const double share = delta(uniform, s, d.size());
    Tensor y(t.shape());
    for (std::size_t k = 0; k < t.numel(); ++k) {
      const std::size_t g = detail::group_of(view, k);
      const std::size_t c = k / view.channel_stride;
      const double scale_k = layer.gamma[c] / std::sqrt(rec.stat_var[g] + layer.eps);
      if (centre) {
        y[k] = scale_k * (t[k] - mean[g]) + share * layer.beta[c];
      } else {
        y[k] = scale_k * t[k] + share * (layer.beta[c] - rec.stat_mean[g] * scale_k);
      }
    }
    return y;
  });
}

}  // namespace

DecomposedTensor lin_layernorm(const LayerSpec& layer, const DecomposedTensor& d, const LayerRecord& rec,
                               const SplitConfig& cfg) {
  cfg.validate(d.modalities());
  if (cfg.ln_rule == LnRule::kRatio) return normalize_components(layer, d, rec, true, false);
  return normalize_components(layer, d, rec, false, cfg.ln_rule == LnRule::kUniform);
}

DecomposedTensor lin_instancenorm(const LayerSpec& layer, const DecomposedTensor& d, const LayerRecord& rec) {
  return normalize_components(layer, d, rec, true, false);
}

DecomposedTensor lin_softmax(const LayerRecord& rec, const DecomposedTensor& d) { return scale_by_slope(rec, d); }

DecomposedTensor lin_matmul(const LayerSpec& layer, const DecomposedTensor& a, const DecomposedTensor& b) {
  if (a.size() != b.size()) throw ShapeError("lin_matmul: component count mismatch");
  const std::size_t m_count = a.modalities();
  std::vector<Tensor> out;
  out.reserve(a.size());
  for (std::size_t m = 0; m < m_count; ++m) out.push_back(detail::matmul_layer(layer, a.slot(m), b.slot(m)));

  // Bias stream: A_b * (sum of all B) + sum_m A_m * (sum of B_n, n != m).
  Tensor b_total = b.slot(0);
  for (std::size_t n = 1; n < b.size(); ++n) b_total = add(b_total, b.slot(n));
  Tensor cross = detail::matmul_layer(layer, a.bias(), b_total);
  for (std::size_t m = 0; m < m_count; ++m) {
    Tensor others = Tensor::zeros(b.shape());
    for (std::size_t n = 0; n < b.size(); ++n)
      if (n != m) add_inplace(others, b.slot(n));
    add_inplace(cross, detail::matmul_layer(layer, a.slot(m), others));
  }
  out.push_back(std::move(cross));
  return DecomposedTensor(std::move(out));
}

DecomposedTensor linearized_layer(const LayerSpec& layer, const LayerRecord& rec,
                                  std::span<const DecomposedTensor* const> in, const SplitConfig& cfg) {
  switch (layer.kind) {
    case LayerKind::kInput:
      throw ConfigError("input layer '" + layer.id + "' has no linearized rule; use split_input");
    case LayerKind::kDense:
    case LayerKind::kConv2d:
      return lin_affine(layer, *in[0]);
    case LayerKind::kBatchNorm:
      return lin_batchnorm(layer, *in[0], cfg);
    case LayerKind::kLayerNorm:
      return lin_layernorm(layer, *in[0], rec, cfg);
    case LayerKind::kInstanceNorm:
      return lin_instancenorm(layer, *in[0], rec);
    case LayerKind::kReLU:
    case LayerKind::kGELU:
      return lin_activation(rec, *in[0], cfg);
    case LayerKind::kSoftmax:
      return lin_softmax(rec, *in[0]);
    case LayerKind::kConcatFusion:
      return lin_concat(layer, in);
    case LayerKind::kResidualAdd:
      return lin_residual_add(*in[0], *in[1]);
    case LayerKind::kMatMul:
      return lin_matmul(layer, *in[0], *in[1]);
  }
  throw ConfigError("unhandled layer kind");
}

}  // namespace lmd
