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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "json.hpp"
#include "lmd/error.hpp"
#include "lmd/metrics.hpp"
#include "lmd/serialize.hpp"
#include "lmd/synth.hpp"
#include "test_util.hpp"

using namespace lmd;
using namespace lmd::test;
using Json = nlohmann::json;

namespace {

// Two 1x3x3 inputs -> concat -> conv 2x2 (2 out channels) -> ReLU.
ModelGraph toy_fusion(Rng& rng) {
  LayerSpec conv;
  conv.id = "conv";
  conv.kind = LayerKind::kConv2d;
  conv.inputs = {"cat"};
  conv.weight = random_tensor(rng, {2, 2, 2, 2});
  conv.bias = random_tensor(rng, {2});
  std::vector<LayerSpec> layers{input_layer("a", 0, {1, 3, 3}), input_layer("b", 1, {1, 3, 3}),
                                concat_layer("cat", {"a", "b"}), conv, unary_layer("relu", LayerKind::kReLU, "conv")};
  return ModelGraph(2, std::move(layers), "relu");
}

}  // namespace

TEST_CASE("modality ids and labels") {
  CHECK(modality_label(ModalityId::modality(0)) == "C");
  CHECK(modality_label(ModalityId::modality(1)) == "R");
  CHECK(modality_label(ModalityId::modality(2)) == "L");
  CHECK(modality_label(ModalityId::bias()) == "B");
  CHECK(ModalityId::bias().slot(3) == 3);
  CHECK(ModalityId::modality(1).slot(3) == 1);
}

TEST_CASE("gelu uses the exact erf form") {
  CHECK(gelu(0.0) == 0.0);
  // x * Phi(x) with Phi(1) = 0.841344746068543
  CHECK(gelu(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-15));
  CHECK(gelu(-1.0) == doctest::Approx(-0.15865525393145707).epsilon(1e-14));
}

TEST_CASE("forward: single dense layer") {
  // With one modality the fusion concat has a single input.
  std::vector<LayerSpec> layers{input_layer("x", 0, {1}), concat_layer("cat", {"x"}),
                                dense_layer("fc", "cat", Tensor::matrix({{2}}), Tensor::vector({1}))};
  const ModelGraph m(1, std::move(layers), "fc");
  const Activations act = forward(m, {Tensor::vector({1})});
  CHECK(act.back() == Tensor::vector({3}));
}

TEST_CASE("forward: bias-free affine net maps zero to zero") {
  SyntheticSpec spec;
  spec.norms = {};
  spec.activations = {};
  spec.layer_bias = false;
  spec.grid = 8;
  const ModelGraph m = gen_synthetic_model(3, spec);
  ModalityInputs zeros;
  for (std::size_t i = 0; i < m.modalities(); ++i) zeros.push_back(Tensor::zeros(m.input_shape(i)));
  CHECK(max_abs(forward(m, zeros).back()) == 0.0);
}

TEST_CASE("forward: toy fusion net against a naive evaluation") {
  Rng rng(11);
  const ModelGraph m = toy_fusion(rng);
  const Tensor a = random_tensor(rng, {1, 3, 3}), b = random_tensor(rng, {1, 3, 3});
  const Activations act = forward(m, {a, b});
  const LayerSpec& conv = m.layer(m.index_of("conv"));
  Tensor expect({2, 2, 2});
  for (std::size_t o = 0; o < 2; ++o)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        double s = conv.bias[o];
        for (std::size_t c = 0; c < 2; ++c) {
          const Tensor& src = c == 0 ? a : b;
          for (std::size_t u = 0; u < 2; ++u)
            for (std::size_t v = 0; v < 2; ++v) s += src[(i + u) * 3 + j + v] * conv.weight[((o * 2 + c) * 2 + u) * 2 + v];
        }
        expect[(o * 2 + i) * 2 + j] = std::max(s, 0.0);
      }
  CHECK(max_abs_diff(act.back(), expect) <= 1e-15);
  CHECK(forward(m, {a, b}) == act);
}

TEST_CASE("forward: input validation") {
  Rng rng(12);
  const ModelGraph m = toy_fusion(rng);
  CHECK_THROWS_AS(forward(m, {Tensor::zeros({1, 3, 3})}), ShapeError);
  CHECK_THROWS_AS(forward(m, {Tensor::zeros({1, 3, 3}), Tensor::zeros({1, 3, 4})}), ShapeError);
}

TEST_CASE("affine models satisfy forward(a x) = a forward(x) + (1 - a) forward(0)") {
  SyntheticSpec spec;
  spec.norms = {};
  spec.activations = {};
  spec.grid = 8;
  spec.depth = 2;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ModelGraph m = gen_synthetic_model(seed, spec);
    const SampleSet s = gen_sample_set(seed, m, 1);
    ModalityInputs zeros, scaled;
    const double alpha = -1.7 + static_cast<double>(seed);
    for (std::size_t i = 0; i < m.modalities(); ++i) {
      zeros.push_back(Tensor::zeros(m.input_shape(i)));
      scaled.push_back(scale(s.samples[0][i], alpha));
    }
    const Tensor fx = forward(m, s.samples[0]).back();
    const Tensor f0 = forward(m, zeros).back();
    const Tensor expect = add(scale(fx, alpha), scale(f0, 1.0 - alpha));
    CHECK(rel_diff(forward(m, scaled).back(), expect) <= 1e-9);
  }
}

TEST_CASE("graph validation") {
  SUBCASE("duplicate ids") {
    std::vector<LayerSpec> layers{input_layer("x", 0, {1}), input_layer("x", 1, {1})};
    CHECK_THROWS_AS(ModelGraph(2, layers, "x"), ParseError);
  }
  SUBCASE("modality without an input layer") {
    std::vector<LayerSpec> layers{input_layer("a", 0, {1}), concat_layer("cat", {"a", "a"})};
    CHECK_THROWS_AS(ModelGraph(2, layers, "cat"), ParseError);
  }
  SUBCASE("path that never fuses") {
    std::vector<LayerSpec> layers{input_layer("a", 0, {1}), input_layer("b", 1, {1}), concat_layer("cat", {"a", "b"}),
                                  unary_layer("r", LayerKind::kReLU, "a")};
    CHECK_THROWS_AS(ModelGraph(2, layers, "r"), ParseError);
  }
  SUBCASE("arity") {
    std::vector<LayerSpec> layers{input_layer("a", 0, {2}), input_layer("b", 1, {2}), concat_layer("cat", {"a", "b"})};
    LayerSpec add = unary_layer("add", LayerKind::kResidualAdd, "cat");
    layers.push_back(add);
    CHECK_THROWS_AS(ModelGraph(2, layers, "add"), ParseError);
  }
  SUBCASE("unknown output") {
    std::vector<LayerSpec> layers{input_layer("a", 0, {1}), input_layer("b", 1, {1}), concat_layer("cat", {"a", "b"})};
    CHECK_THROWS_AS(ModelGraph(2, layers, "nope"), ParseError);
  }
}

TEST_CASE("save/load round trip") {
  for (const bool attention : {false, true}) {
    SyntheticSpec spec;
    spec.include_attention = attention;
    spec.grid = 8;
    spec.modalities = attention ? 3 : 2;
    const ModelGraph m = gen_synthetic_model(5, spec);
    const std::string doc = save_model(m);
    const ModelGraph back = load_model(doc);
    CHECK(back == m);
    CHECK(save_model(back) == doc);
  }
}

TEST_CASE("load_model errors name the offending layer") {
  SyntheticSpec spec;
  spec.grid = 4;
  spec.depth = 1;
  const Json base = Json::parse(save_model(gen_synthetic_model(1, spec)));

  SUBCASE("cycle") {
    Json j = base;
    // Feed the first branch conv from the head, closing a loop.
    for (auto& l : j["layers"])
      if (l["id"] == "branch_m0_conv") l["inputs"] = {"head"};
    try {
      load_model(j.dump());
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("cycle") != std::string::npos);
    }
  }
  SUBCASE("dangling input") {
    Json j = base;
    j["layers"][2]["inputs"] = {"ghost"};
    try {
      load_model(j.dump());
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
  }
  SUBCASE("unknown kind") {
    Json j = base;
    j["layers"][3]["kind"] = "maxpool";
    CHECK_THROWS_AS(load_model(j.dump()), ParseError);
  }
  SUBCASE("missing modality count") {
    Json j = base;
    j.erase("modalities");
    CHECK_THROWS_AS(load_model(j.dump()), ParseError);
  }
  SUBCASE("missing input layer for a modality") {
    Json j = base;
    j["modalities"] = 3;
    CHECK_THROWS_AS(load_model(j.dump()), ParseError);
  }
  SUBCASE("shuffled layer order is sorted topologically") {
    Json j = base;
    std::reverse(j["layers"].begin(), j["layers"].end());
    const ModelGraph shuffled = load_model(j.dump());
    const ModelGraph plain = load_model(base.dump());
    CHECK(shuffled.layers().size() == plain.layers().size());
    const SampleSet s = gen_sample_set(2, plain, 1);
    CHECK(forward(shuffled, s.samples[0])[shuffled.output_index()] ==
          forward(plain, s.samples[0])[plain.output_index()]);
  }
  CHECK_THROWS_AS(load_model("{not json"), ParseError);
}

TEST_CASE("synthetic generator") {
  SUBCASE("deterministic") {
    SyntheticSpec spec;
    spec.grid = 8;
    CHECK(save_model(gen_synthetic_model(9, spec)) == save_model(gen_synthetic_model(9, spec)));
    CHECK(save_model(gen_synthetic_model(9, spec)) != save_model(gen_synthetic_model(10, spec)));
  }
  SUBCASE("layer count") {
    SyntheticSpec spec;
    spec.depth = 1;
    spec.modalities = 2;
    CHECK(synthetic_layer_count(spec) == 15);
    CHECK(gen_synthetic_model(1, spec).layers().size() == 15);
    for (std::size_t m : {1, 3})
      for (std::size_t d : {1, 2, 4})
        for (bool att : {false, true}) {
          spec.modalities = m;
          spec.depth = d;
          spec.include_attention = att;
          spec.grid = 4;
          CHECK(gen_synthetic_model(2, spec).layers().size() == synthetic_layer_count(spec));
        }
  }
  SUBCASE("three modalities") {
    SyntheticSpec spec;
    spec.modalities = 3;
    spec.grid = 4;
    const ModelGraph m = gen_synthetic_model(1, spec);
    std::size_t inputs = 0;
    for (const auto& l : m.layers()) inputs += l.kind == LayerKind::kInput;
    CHECK(inputs == 3);
  }
  SUBCASE("attention block") {
    SyntheticSpec spec;
    spec.include_attention = true;
    spec.grid = 4;
    const ModelGraph m = gen_synthetic_model(1, spec);
    bool matmul = false, softmax = false;
    for (const auto& l : m.layers()) {
      matmul |= l.kind == LayerKind::kMatMul;
      softmax |= l.kind == LayerKind::kSoftmax;
    }
    CHECK(matmul);
    CHECK(softmax);
  }
  SUBCASE("seed 7 default net is finite on seed 7 inputs") {
    const ModelGraph m = gen_synthetic_model(7, SyntheticSpec{});
    const SampleSet s = gen_sample_set(7, m, 2);
    for (const auto& a : forward(m, s.samples[0])) CHECK(all_finite(a));
  }
  CHECK_THROWS_AS(gen_synthetic_model(1, SyntheticSpec{.modalities = 0}), ConfigError);
  CHECK_THROWS_AS(gen_synthetic_model(1, SyntheticSpec{.depth = 0}), ConfigError);
}

TEST_CASE("sample sets") {
  SyntheticSpec spec;
  spec.grid = 16;
  const ModelGraph m = gen_synthetic_model(4, spec);
  const SampleSet a = gen_sample_set(21, m, 20);
  CHECK(a == gen_sample_set(21, m, 20));
  CHECK(a.size() == 20);
  CHECK(load_samples(save_samples(a)) == a);

  // Distant samples are close to uncorrelated.
  double total = 0.0;
  for (std::size_t k = 0; k < 20; ++k) total += pearson(a.samples[k][0], a.samples[(k + 10) % 20][0]).value;
  CHECK(total / 20.0 < 0.2);
}
