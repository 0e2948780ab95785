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

#include "lmd/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <utility>

#include "lmd/error.hpp"
#include "model_internal.hpp"

namespace lmd {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 12> kKindNames{{
    {LayerKind::kInput, "input"},
    {LayerKind::kDense, "dense"},
    {LayerKind::kConv2d, "conv2d"},
    {LayerKind::kBatchNorm, "batchnorm"},
    {LayerKind::kLayerNorm, "layernorm"},
    {LayerKind::kInstanceNorm, "instancenorm"},
    {LayerKind::kReLU, "relu"},
    {LayerKind::kGELU, "gelu"},
    {LayerKind::kSoftmax, "softmax"},
    {LayerKind::kConcatFusion, "concat"},
    {LayerKind::kResidualAdd, "residual_add"},
    {LayerKind::kMatMul, "matmul"},
}};

bool is_fusion(LayerKind k) { return k == LayerKind::kConcatFusion || k == LayerKind::kMatMul; }

[[noreturn]] void fail(const LayerSpec& layer, const std::string& what) {
  throw ParseError("layer '" + layer.id + "': " + what);
}

void require_vector(const LayerSpec& layer, const Tensor& t, std::size_t n, const char* name) {
  if (t.rank() != 1 || t.extent(0) != n) {
    fail(layer, std::string(name) + " must have shape [" + std::to_string(n) + "], got " +
                    shape_string(t.shape()));
  }
}

Tensor apply_dense(const LayerSpec& l, const Tensor& x, bool with_bias) {
  const std::size_t out = l.weight.extent(0);
  const std::size_t cols = x.numel() / x.extent(0);
  Tensor y = matmul(l.weight, x.reshaped({x.extent(0), cols}));
  if (with_bias) {
    auto z = y.mutable_data();
    for (std::size_t o = 0; o < out; ++o)
      for (std::size_t j = 0; j < cols; ++j) z[o * cols + j] += l.bias[o];
  }
  Shape s = x.shape();
  s[0] = out;
  return y.reshaped(std::move(s));
}

}  // namespace

std::string modality_label(ModalityId id) {
  if (id.is_bias()) return "B";
  static constexpr std::array<const char*, 3> kNames{"C", "R", "L"};
  if (id.index() < kNames.size()) return kNames[id.index()];
  return "M" + std::to_string(id.index());
}

std::string_view kind_name(LayerKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<LayerKind> kind_from_name(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  return std::nullopt;
}

bool LayerSpec::operator==(const LayerSpec& o) const {
  return id == o.id && kind == o.kind && inputs == o.inputs && modality == o.modality &&
         input_shape == o.input_shape && weight == o.weight && bias == o.bias && conv == o.conv &&
         mean == o.mean && var == o.var && gamma == o.gamma && beta == o.beta && eps == o.eps &&
         axes == o.axes && axis == o.axis && transpose_a == o.transpose_a &&
         transpose_b == o.transpose_b;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

namespace detail {

std::vector<std::size_t> norm_axes(const LayerSpec& l, std::size_t rank) {
  if (l.kind == LayerKind::kInstanceNorm) {
    std::vector<std::size_t> axes;
    for (std::size_t d = 1; d < rank; ++d) axes.push_back(d);
    return axes;
  }
  return l.axes;
}

std::size_t group_of(const ReductionView& v, std::size_t flat) {
  std::size_t g = 0;
  for (std::size_t d = 0; d < v.shape.size(); ++d) {
    const std::size_t coord = (flat / v.stride[d]) % v.shape[d];
    if (!v.reduced[d]) g = g * v.shape[d] + coord;
  }
  return g;
}

ReductionView make_view(const Shape& shape, const std::vector<std::size_t>& axes) {
  ReductionView v;
  v.shape = shape;
  v.reduced.assign(shape.size(), false);
  for (auto a : axes) v.reduced.at(a) = true;
  v.stride.assign(shape.size(), 1);
  for (std::size_t d = shape.size(); d-- > 1;) v.stride[d - 1] = v.stride[d] * shape[d];
  v.channel_stride = shape.empty() ? 1 : v.stride[0];
  return v;
}

Tensor dense(const LayerSpec& l, const Tensor& x, bool with_bias) { return apply_dense(l, x, with_bias); }

Tensor conv(const LayerSpec& l, const Tensor& x, bool with_bias) {
  return conv2d(x, l.weight, with_bias ? l.bias : Tensor(), l.conv);
}

Tensor matmul_layer(const LayerSpec& l, const Tensor& a, const Tensor& b) {
  Tensor am = a.reshaped({a.extent(0), a.numel() / a.extent(0)});
  Tensor bm = b.reshaped({b.extent(0), b.numel() / b.extent(0)});
  if (l.transpose_a) am = transpose2d(am);
  if (l.transpose_b) bm = transpose2d(bm);
  Tensor c = matmul(am, bm);
  return c.reshaped(matmul_output_shape(l, a.shape(), b.shape()));
}

Shape matmul_output_shape(const LayerSpec& l, const Shape& a, const Shape& b) {
  const std::size_t a0 = a.at(0), arest = shape_numel(a) / a0;
  const std::size_t b0 = b.at(0), brest = shape_numel(b) / b0;
  const std::size_t rows = l.transpose_a ? arest : a0;
  const std::size_t inner_a = l.transpose_a ? a0 : arest;
  const std::size_t inner_b = l.transpose_b ? brest : b0;
  if (inner_a != inner_b) {
    throw ShapeError("matmul layer '" + l.id + "': inner extents " + std::to_string(inner_a) +
                     " and " + std::to_string(inner_b) + " differ");
  }
  if (l.transpose_b) return {rows, b0};
  Shape out{rows};
  if (b.size() == 1) return {rows, 1};
  out.insert(out.end(), b.begin() + 1, b.end());
  return out;
}

}  // namespace detail

Tensor evaluate_layer(const LayerSpec& l, std::span<const Tensor* const> in) {
  switch (l.kind) {
    case LayerKind::kInput:
      throw Error("evaluate_layer called on input layer '" + l.id + "'");
    case LayerKind::kDense:
      return detail::dense(l, *in[0], true);
    case LayerKind::kConv2d:
      return detail::conv(l, *in[0], true);
    case LayerKind::kBatchNorm: {
      const Tensor& x = *in[0];
      Tensor y(x.shape());
      const std::size_t per = x.numel() / x.extent(0);
      for (std::size_t c = 0; c < x.extent(0); ++c) {
        const double inv = 1.0 / std::sqrt(l.var[c] + l.eps);
        for (std::size_t i = 0; i < per; ++i) {
          const std::size_t k = c * per + i;
          y[k] = (x[k] - l.mean[c]) * inv * l.gamma[c] + l.beta[c];
        }
      }
      return y;
    }
    case LayerKind::kLayerNorm:
    case LayerKind::kInstanceNorm: {
      const Tensor& x = *in[0];
      const auto axes = detail::norm_axes(l, x.rank());
      const Moments mom = moments(x, axes);
      const auto view = detail::make_view(x.shape(), axes);
      Tensor y(x.shape());
      for (std::size_t k = 0; k < x.numel(); ++k) {
        const std::size_t g = detail::group_of(view, k);
        const std::size_t c = k / view.channel_stride;
        y[k] = (x[k] - mom.mean[g]) / std::sqrt(mom.variance[g] + l.eps) * l.gamma[c] + l.beta[c];
      }
      return y;
    }
    case LayerKind::kReLU: {
      Tensor y(in[0]->shape());
      for (std::size_t k = 0; k < y.numel(); ++k) y[k] = std::max((*in[0])[k], 0.0);
      return y;
    }
    case LayerKind::kGELU: {
      Tensor y(in[0]->shape());
      for (std::size_t k = 0; k < y.numel(); ++k) y[k] = gelu((*in[0])[k]);
      return y;
    }
    case LayerKind::kSoftmax: {
      const Tensor& x = *in[0];
      Tensor y(x.shape());
      const std::size_t n = x.shape().back();
      for (std::size_t r = 0; r < x.numel() / n; ++r) {
        double mx = x[r * n];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[r * n + j]);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          y[r * n + j] = std::exp(x[r * n + j] - mx);
          s += y[r * n + j];
        }
        for (std::size_t j = 0; j < n; ++j) y[r * n + j] /= s;
      }
      return y;
    }
    case LayerKind::kConcatFusion: {
      std::vector<Tensor> parts;
      parts.reserve(in.size());
      for (const Tensor* t : in) parts.push_back(*t);
      return concat(parts, l.axis);
    }
    case LayerKind::kResidualAdd:
      return add(*in[0], *in[1]);
    case LayerKind::kMatMul:
      return detail::matmul_layer(l, *in[0], *in[1]);
  }
  throw Error("unhandled layer kind");
}

Shape infer_shape(const LayerSpec& l, const std::vector<Shape>& in) {
  auto rank_at_least = [&](std::size_t r) {
    if (in[0].size() < r) fail(l, "input rank " + std::to_string(in[0].size()) + " below " + std::to_string(r));
  };
  switch (l.kind) {
    case LayerKind::kInput:
      if (l.input_shape.empty() || shape_numel(l.input_shape) == 0) fail(l, "input shape must be non-empty");
      return l.input_shape;
    case LayerKind::kDense: {
      rank_at_least(1);
      if (l.weight.rank() != 2 || l.weight.extent(1) != in[0][0]) {
        fail(l, "weight " + shape_string(l.weight.shape()) + " does not accept input " + shape_string(in[0]));
      }
      require_vector(l, l.bias, l.weight.extent(0), "bias");
      Shape s = in[0];
      s[0] = l.weight.extent(0);
      return s;
    }
    case LayerKind::kConv2d: {
      if (in[0].size() != 3) fail(l, "conv2d input must be [C,H,W], got " + shape_string(in[0]));
      if (l.weight.rank() != 4 || l.weight.extent(1) != in[0][0]) {
        fail(l, "weight " + shape_string(l.weight.shape()) + " does not accept input " + shape_string(in[0]));
      }
      require_vector(l, l.bias, l.weight.extent(0), "bias");
      try {
        return {l.weight.extent(0), conv_output_extent(in[0][1], l.weight.extent(2), l.conv),
                conv_output_extent(in[0][2], l.weight.extent(3), l.conv)};
      } catch (const ShapeError& e) {
        fail(l, e.what());
      }
    }
    case LayerKind::kBatchNorm:
      rank_at_least(1);
      for (const auto* t : {&l.mean, &l.var, &l.gamma, &l.beta}) require_vector(l, *t, in[0][0], "batchnorm parameter");
      for (double v : l.var.data())
        if (!(v >= 0.0)) fail(l, "batchnorm variance must be non-negative");
      return in[0];
    case LayerKind::kLayerNorm:
    case LayerKind::kInstanceNorm: {
      rank_at_least(l.kind == LayerKind::kInstanceNorm ? 2 : 1);
      require_vector(l, l.gamma, in[0][0], "gamma");
      require_vector(l, l.beta, in[0][0], "beta");
      const auto axes = detail::norm_axes(l, in[0].size());
      if (axes.empty()) fail(l, "normalization axes must be non-empty");
      for (auto a : axes)
        if (a >= in[0].size()) fail(l, "normalization axis " + std::to_string(a) + " out of range");
      return in[0];
    }
    case LayerKind::kReLU:
    case LayerKind::kGELU:
    case LayerKind::kSoftmax:
      rank_at_least(1);
      return in[0];
    case LayerKind::kConcatFusion: {
      Shape s = in[0];
      if (l.axis >= s.size()) fail(l, "concat axis out of range");
      for (std::size_t i = 1; i < in.size(); ++i) {
        if (in[i].size() != s.size()) fail(l, "concat rank mismatch");
        for (std::size_t d = 0; d < s.size(); ++d)
          if (d != l.axis && in[i][d] != s[d]) fail(l, "concat extent mismatch " + shape_string(in[i]) + " vs " + shape_string(s));
        s[l.axis] += in[i][l.axis];
      }
      return s;
    }
    case LayerKind::kResidualAdd:
      if (in[0] != in[1]) fail(l, "residual operands differ: " + shape_string(in[0]) + " vs " + shape_string(in[1]));
      return in[0];
    case LayerKind::kMatMul:
      try {
        return detail::matmul_output_shape(l, in[0], in[1]);
      } catch (const ShapeError& e) {
        fail(l, e.what());
      }
  }
  fail(l, "unhandled kind");
}

ModelGraph::ModelGraph(std::size_t modalities, std::vector<LayerSpec> layers, std::string output)
    : modalities_(modalities), layers_(std::move(layers)), output_(std::move(output)) {
  if (modalities_ < 1) throw ParseError("model must declare at least one modality");
  input_layers_.assign(modalities_, static_cast<std::size_t>(-1));
  std::vector<Shape> shapes;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& l = layers_[i];
    if (l.id.empty()) throw ParseError("layer at position " + std::to_string(i) + " has an empty id");
    if (!index_.emplace(l.id, i).second) fail(l, "duplicate layer id");

    std::size_t min_in = 1, max_in = 1;
    switch (l.kind) {
      case LayerKind::kInput: min_in = max_in = 0; break;
      case LayerKind::kConcatFusion: min_in = std::min<std::size_t>(2, modalities_); max_in = static_cast<std::size_t>(-1); break;
      case LayerKind::kResidualAdd:
      case LayerKind::kMatMul: min_in = max_in = 2; break;
      default: break;
    }
    if (l.inputs.size() < min_in || l.inputs.size() > max_in) {
      fail(l, std::string(kind_name(l.kind)) + " takes " +
                  (min_in == max_in ? std::to_string(min_in) : "at least " + std::to_string(min_in)) +
                  " inputs, got " + std::to_string(l.inputs.size()));
    }

    std::vector<std::size_t> ups;
    std::vector<Shape> in_shapes;
    for (const auto& src : l.inputs) {
      auto it = index_.find(src);
      if (it == index_.end() || it->second == i) fail(l, "input '" + src + "' is not defined before this layer");
      ups.push_back(it->second);
      in_shapes.push_back(shapes[it->second]);
    }
    upstream_.push_back(std::move(ups));

    if (l.kind == LayerKind::kInput) {
      if (l.modality >= modalities_) fail(l, "modality index " + std::to_string(l.modality) + " out of range");
      if (input_layers_[l.modality] != static_cast<std::size_t>(-1))
        fail(l, "second input layer for modality " + std::to_string(l.modality));
      input_layers_[l.modality] = i;
    }
    shapes.push_back(infer_shape(l, in_shapes));
  }
  for (std::size_t m = 0; m < modalities_; ++m) {
    if (input_layers_[m] == static_cast<std::size_t>(-1)) {
      throw ParseError("no input layer for modality " + std::to_string(m));
    }
  }
  auto out = index_.find(output_);
  if (out == index_.end()) throw ParseError("output layer '" + output_ + "' is not defined");
  output_index_ = out->second;

  // Every Input->output path must cross a fusion layer: flood from the inputs
  // along consumer edges, stopping at fusion layers, and require that the
  // output is not reached.
  std::vector<bool> unfused(layers_.size(), false);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].kind == LayerKind::kInput) {
      unfused[i] = true;
    } else if (!is_fusion(layers_[i].kind)) {
      for (auto u : upstream_[i]) unfused[i] = unfused[i] || unfused[u];
    }
  }
  if (unfused[output_index_]) {
    throw ParseError("output layer '" + output_ + "' is reachable from an input without passing a fusion layer");
  }
}

std::size_t ModelGraph::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw ParseError("unknown layer id '" + std::string(id) + "'");
  return it->second;
}

const Shape& ModelGraph::input_shape(std::size_t modality) const {
  return layers_.at(input_layer(modality)).input_shape;
}

void check_inputs(const ModelGraph& model, const ModalityInputs& inputs) {
  if (inputs.size() != model.modalities()) {
    throw ShapeError("expected inputs for " + std::to_string(model.modalities()) + " modalities, got " +
                     std::to_string(inputs.size()));
  }
  for (std::size_t m = 0; m < inputs.size(); ++m) {
    if (inputs[m].shape() != model.input_shape(m)) {
      throw ShapeError("modality " + std::to_string(m) + " input has shape " + shape_string(inputs[m].shape()) +
                       ", model expects " + shape_string(model.input_shape(m)));
    }
  }
}

Activations forward(const ModelGraph& model, const ModalityInputs& inputs) {
  check_inputs(model, inputs);
  Activations acts(model.layers().size());
  std::vector<const Tensor*> args;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    const LayerSpec& l = model.layer(i);
    if (l.kind == LayerKind::kInput) {
      acts[i] = inputs[l.modality];
      continue;
    }
    args.clear();
    for (auto u : model.upstream(i)) args.push_back(&acts[u]);
    acts[i] = evaluate_layer(l, args);
  }
  return acts;
}

}  // namespace lmd
