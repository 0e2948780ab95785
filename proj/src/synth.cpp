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

#include "lmd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmd/error.hpp"
#include "lmd/rng.hpp"

namespace lmd {

namespace {

constexpr std::size_t kBlobsPerChannel = 4;

bool is_norm(LayerKind k) {
  return k == LayerKind::kBatchNorm || k == LayerKind::kLayerNorm || k == LayerKind::kInstanceNorm;
}

bool is_activation(LayerKind k) { return k == LayerKind::kReLU || k == LayerKind::kGELU; }

std::string lower_name(LayerKind k) { return std::string(kind_name(k)); }

class Builder {
 public:
  explicit Builder(Rng& rng, bool layer_bias) : rng_(rng), layer_bias_(layer_bias) {}

  std::vector<LayerSpec> layers;

  Tensor uniform(Shape shape, double a) {
    Tensor t(std::move(shape));
    for (auto& v : t.mutable_data()) v = rng_.uniform(-a, a);
    return t;
  }

  Tensor uniform_range(std::size_t n, double lo, double hi) {
    Tensor t({n});
    for (auto& v : t.mutable_data()) v = rng_.uniform(lo, hi);
    return t;
  }

  const std::string& push(LayerSpec l) {
    layers.push_back(std::move(l));
    return layers.back().id;
  }

  std::string input(std::string id, std::size_t modality, Shape shape) {
    LayerSpec l;
    l.id = std::move(id);
    l.kind = LayerKind::kInput;
    l.modality = modality;
    l.input_shape = std::move(shape);
    return push(std::move(l));
  }

  std::string conv(std::string id, const std::string& src, std::size_t cin, std::size_t cout, std::size_t k) {
    LayerSpec l;
    l.id = std::move(id);
    l.kind = LayerKind::kConv2d;
    l.inputs = {src};
    const double a = 1.0 / std::sqrt(static_cast<double>(cin * k * k));
    l.weight = uniform({cout, cin, k, k}, a);
    l.bias = layer_bias_ ? uniform({cout}, a) : Tensor({cout});
    l.conv = {1, k / 2};
    return push(std::move(l));
  }

  std::string dense(std::string id, const std::string& src, std::size_t in, std::size_t out, double gain = 1.0) {
    LayerSpec l;
    l.id = std::move(id);
    l.kind = LayerKind::kDense;
    l.inputs = {src};
    const double a = 1.0 / std::sqrt(static_cast<double>(in));
    l.weight = scale(uniform({out, in}, a), gain);
    l.bias = layer_bias_ ? uniform({out}, a) : Tensor({out});
    return push(std::move(l));
  }

  std::string norm(std::string id, LayerKind kind, const std::string& src, std::size_t channels, std::size_t rank) {
    LayerSpec l;
    l.id = std::move(id);
    l.kind = kind;
    l.inputs = {src};
    l.gamma = uniform_range(channels, 0.5, 1.5);
    l.beta = uniform_range(channels, -0.2, 0.2);
    l.eps = 1e-5;
    if (kind == LayerKind::kBatchNorm) {
      l.mean = uniform_range(channels, -0.1, 0.1);
      l.var = uniform_range(channels, 0.05, 0.3);
    } else if (kind == LayerKind::kLayerNorm) {
      for (std::size_t d = 0; d < rank; ++d) l.axes.push_back(d);
    }
    return push(std::move(l));
  }

  std::string unary(std::string id, LayerKind kind, const std::string& src) {
    LayerSpec l;
    l.id = std::move(id);
    l.kind = kind;
    l.inputs = {src};
    return push(std::move(l));
  }

  std::string binary(std::string id, LayerKind kind, const std::string& a, const std::string& b) {
    LayerSpec l;
    l.id = std::move(id);
    l.kind = kind;
    l.inputs = {a, b};
    return push(std::move(l));
  }

 private:
  Rng& rng_;
  bool layer_bias_;
};

void validate(const SyntheticSpec& s) {
  if (s.modalities < 1) throw ConfigError("synthetic model needs at least one modality");
  if (s.depth < 1) throw ConfigError("synthetic model depth must be at least 1");
  if (s.grid < 1 || s.input_channels < 1 || s.branch_channels < 1 || s.trunk_channels < 1) {
    throw ConfigError("synthetic model extents must be positive");
  }
  for (auto k : s.norms)
    if (!is_norm(k)) throw ConfigError("'" + std::string(kind_name(k)) + "' is not a normalization kind");
  for (auto k : s.activations)
    if (!is_activation(k)) throw ConfigError("'" + std::string(kind_name(k)) + "' is not an activation kind");
}

}  // namespace

std::size_t synthetic_layer_count(const SyntheticSpec& s) {
  const std::size_t n = s.norms.empty() ? 0 : 1;
  const std::size_t a = s.activations.empty() ? 0 : 1;
  return s.modalities * (2 + n + a) + 2 + s.depth * (1 + n + a) + 1 + (s.include_attention ? 6 : 0) + 1;
}

ModelGraph gen_synthetic_model(std::uint64_t seed, const SyntheticSpec& spec) {
  validate(spec);
  Rng rng(seed);
  Builder b(rng, spec.layer_bias);
  const std::size_t g = spec.grid;

  std::vector<std::string> branches;
  for (std::size_t m = 0; m < spec.modalities; ++m) {
    const std::string tag = "m" + std::to_string(m);
    std::string x = b.input("input_" + tag, m, {spec.input_channels, g, g});
    x = b.conv("branch_" + tag + "_conv", x, spec.input_channels, spec.branch_channels, 3);
    if (!spec.norms.empty()) x = b.norm("branch_" + tag + "_batchnorm", LayerKind::kBatchNorm, x, spec.branch_channels, 3);
    if (!spec.activations.empty()) x = b.unary("branch_" + tag + "_relu", LayerKind::kReLU, x);
    branches.push_back(x);
  }

  LayerSpec cat;
  cat.id = "fusion_concat";
  cat.kind = LayerKind::kConcatFusion;
  cat.inputs = branches;
  cat.axis = 0;
  std::string x = b.push(std::move(cat));
  const std::string fused = b.conv("fusion_conv", x, spec.modalities * spec.branch_channels, spec.trunk_channels, 1);
  x = fused;

  const std::size_t c = spec.trunk_channels;
  for (std::size_t blk = 0; blk < spec.depth; ++blk) {
    const std::string tag = "block" + std::to_string(blk);
    x = blk % 2 == 0 ? b.conv(tag + "_conv", x, c, c, 3) : b.dense(tag + "_dense", x, c, c);
    if (!spec.norms.empty()) {
      const LayerKind k = spec.norms[blk % spec.norms.size()];
      x = b.norm(tag + "_" + lower_name(k), k, x, c, 3);
    }
    if (!spec.activations.empty()) {
      const LayerKind k = spec.activations[blk % spec.activations.size()];
      x = b.unary(tag + "_" + lower_name(k), k, x);
    }
  }
  x = b.binary("residual", LayerKind::kResidualAdd, fused, x);

  if (spec.include_attention) {
    // Channel attention: scores are [C, C], so the logits sum over the grid;
    // the query gain keeps them O(1).
    const double gain = 1.0 / static_cast<double>(g);
    const std::string q = b.dense("attn_q", x, c, c, gain);
    const std::string k = b.dense("attn_k", x, c, c);
    const std::string v = b.dense("attn_v", x, c, c);
    LayerSpec scores;
    scores.id = "attn_scores";
    scores.kind = LayerKind::kMatMul;
    scores.inputs = {q, k};
    scores.transpose_b = true;
    const std::string s = b.push(std::move(scores));
    const std::string p = b.unary("attn_softmax", LayerKind::kSoftmax, s);
    x = b.binary("attn_out", LayerKind::kMatMul, p, v);
  }

  const std::string head = b.conv("head", x, c, 1, 1);
  return ModelGraph(spec.modalities, std::move(b.layers), head);
}

SampleSet gen_sample_set(std::uint64_t seed, const ModelGraph& model, std::size_t n) {
  if (n < 1) throw ConfigError("sample count must be at least 1");
  SampleSet set;
  set.modalities = model.modalities();
  set.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t m = 0; m < model.modalities(); ++m) {
      const Shape& shape = model.input_shape(m);
      // Treat any input as [C, H, W], padding missing leading extents with 1.
      Shape s3 = shape;
      while (s3.size() < 3) s3.insert(s3.begin(), 1);
      const std::size_t ch = shape_numel(s3) / (s3[s3.size() - 1] * s3[s3.size() - 2]);
      const std::size_t h = s3[s3.size() - 2], w = s3.back();
      Rng rng = Rng::derive(seed, k, m);
      Tensor t(shape);
      auto z = t.mutable_data();
      const double max_sigma = 1.5 + 0.15 * static_cast<double>(std::max(h, w));
      for (std::size_t c = 0; c < ch; ++c) {
        for (std::size_t blob = 0; blob < kBlobsPerChannel; ++blob) {
          const double cy = rng.uniform(0.0, static_cast<double>(h));
          const double cx = rng.uniform(0.0, static_cast<double>(w));
          const double sigma = rng.uniform(1.5, max_sigma);
          const double amp = rng.uniform(-1.0, 1.0);
          const double inv = 1.0 / (2.0 * sigma * sigma);
          for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t xx = 0; xx < w; ++xx) {
              const double dy = static_cast<double>(y) - cy;
              const double dx = static_cast<double>(xx) - cx;
              z[(c * h + y) * w + xx] += amp * std::exp(-(dy * dy + dx * dx) * inv);
            }
          }
        }
      }
      set.samples[k].push_back(std::move(t));
    }
  }
  return set;
}

}  // namespace lmd
