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
#include <cmath>

#include "doctest.h"
#include "lmd/error.hpp"
#include "lmd/metrics.hpp"
#include "lmd/report.hpp"
#include "test_util.hpp"

using namespace lmd;
using namespace lmd::test;

namespace {

SyntheticSpec tiny_spec(std::size_t modalities = 2) {
  SyntheticSpec s;
  s.modalities = modalities;
  s.grid = 8;
  s.depth = 2;
  s.branch_channels = 3;
  s.trunk_channels = 4;
  return s;
}

}  // namespace

TEST_CASE("pearson") {
  const Tensor a = Tensor::vector({1, 2, 3});
  CHECK(pearson(a, a).value == 1.0);
  CHECK(pearson(a, Tensor::vector({3, 2, 1})).value == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(pearson(Tensor::vector({1, 1, 2}), a).value == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-15));

  const PearsonResult flat = pearson(Tensor::vector({2, 2, 2}), a);
  CHECK(flat.degenerate);
  CHECK(flat.value == 0.0);
  CHECK_FALSE(pearson(a, a).degenerate);

  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Tensor x = random_tensor(rng, {40});
    const Tensor y = random_tensor(rng, {40});
    const double s = rng.uniform(0.1, 10.0), c = rng.uniform(-5.0, 5.0);
    Tensor xs = x;
    for (auto& v : xs.mutable_data()) v = s * v + c;
    const double r = pearson(x, y).value;
    CHECK(std::fabs(pearson(xs, y).value - r) <= 1e-12);
    CHECK(std::fabs(pearson(y, x).value - r) <= 1e-15);
    CHECK(std::fabs(r) <= 1.0);
  }
  CHECK_THROWS_AS(pearson(a, Tensor::vector({1, 2})), ShapeError);
}

TEST_CASE("mse") {
  CHECK(mse(Tensor::vector({0, 0}), Tensor::vector({0, 0})) == 0.0);
  CHECK(mse(Tensor::vector({1, 2}), Tensor::vector({2, 3})) == 1.0);
  CHECK(mse(Tensor::vector({0, 0}), Tensor::vector({1, 2})) == 2.5);
  CHECK_THROWS_AS(mse(Tensor::vector({0}), Tensor::vector({1, 2})), ShapeError);
}

TEST_CASE("metric config") {
  MetricConfig c;
  c.offset_stride = 2;
  c.offset_count = 3;
  CHECK(c.offsets() == std::vector<std::size_t>{2, 4, 6});
  CHECK_NOTHROW(c.validate(20, 2));
  CHECK_THROWS_AS(c.validate(6, 2), ConfigError);  // 6 wraps onto the anchor
  CHECK_THROWS_AS(c.validate(4, 2), ConfigError);  // 2 and 6 collide
  CHECK_THROWS_AS(c.validate(1, 2), ConfigError);
  c.sample_limit = 30;
  CHECK_THROWS_AS(c.validate(20, 2), ConfigError);
  c.sample_limit = 0;
  c.perturb_sets = {{0, 0}};
  CHECK_THROWS_AS(c.validate(20, 2), ConfigError);
  c.perturb_sets = {{2}};
  CHECK_THROWS_AS(c.validate(20, 2), ConfigError);
  c.perturb_sets = {{}};
  CHECK_THROWS_AS(c.validate(20, 2), ConfigError);

  MetricConfig self;
  self.explicit_offsets = {0};
  CHECK_NOTHROW(self.validate(3, 2));

  for (std::size_t n : {2, 3, 7, 20, 100, 6019}) {
    const MetricConfig d = MetricConfig::defaults_for(n);
    CHECK(d.offset_count >= 1);
    CHECK(d.offset_count <= 12);
    CHECK_NOTHROW(d.validate(n, 2));
  }
  const MetricConfig big = MetricConfig::defaults_for(6019);
  CHECK(big.offset_stride == 500);
  CHECK(big.offset_count == 12);
  CHECK(MetricConfig::defaults_for(20).offset_stride == 2);
}

TEST_CASE("labels and pairs") {
  CHECK(cell_label({1}, 0) == "R_p/C");
  CHECK(cell_label({2, 1}, 0) == "R_pL_p/C");
  CHECK(all_pairs(3) == std::vector<std::vector<std::size_t>>{{0, 1}, {0, 2}, {1, 2}});
}

TEST_CASE("self-replacement is the identity") {
  const ModelGraph m = gen_synthetic_model(1, tiny_spec());
  const SampleSet s = gen_sample_set(1, m, 3);
  MetricConfig mc;
  mc.explicit_offsets = {0};
  const SeparationReport r = perturbation_protocol(m, s, SplitConfig{}, mc);
  CHECK(r.cells.size() == 4);
  for (const auto& c : r.cells) {
    CHECK(c.pcc_mean == 1.0);
    CHECK(c.pcc_std == 0.0);
    CHECK(c.mse_mean == 0.0);
    CHECK(c.n == 3);
  }
  // Sample 2 has a dead camera branch: its map is identically zero, so that
  // comparison is degenerate and left out of the PCC statistics.
  CHECK(r.cell({0}, 0).n_degenerate == 1);
  CHECK(r.cell({0}, 1).n_degenerate == 0);
}

TEST_CASE("separation on a synthetic net") {
  const ModelGraph m = gen_synthetic_model(2, tiny_spec());
  const SampleSet s = gen_sample_set(2, m, 6);
  MetricConfig mc;
  mc.offset_stride = 1;
  mc.offset_count = 3;
  const SeparationReport r = perturbation_protocol(m, s, SplitConfig{}, mc);
  CHECK(r.anchors == 6);
  CHECK(r.cell({1}, 0).pcc_mean == 1.0);
  CHECK(r.cell({1}, 0).mse_mean == 0.0);
  CHECK(r.cell({0}, 1).pcc_mean == 1.0);
  CHECK(r.cell({0}, 0).pcc_mean < 1.0);
  CHECK(r.cell({0}, 0).mse_mean > 0.0);
  CHECK(r.cell({0}, 0).n == 18);
  CHECK_THROWS_AS(r.cell({0, 1}, 0), ConfigError);

  SUBCASE("offset order does not matter") {
    MetricConfig shuffled;
    shuffled.explicit_offsets = {3, 1, 2};
    CHECK(perturbation_protocol(m, s, SplitConfig{}, shuffled) == r);
  }
  SUBCASE("variant matrix of one equals the protocol") {
    const auto v = variant_matrix(m, s, {SplitConfig{}}, mc);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == r);
    CHECK_THROWS_AS(variant_matrix(m, s, {}, mc), ConfigError);
  }
  SUBCASE("sample limit") {
    MetricConfig lim = mc;
    lim.sample_limit = 2;
    const SeparationReport rl = perturbation_protocol(m, s, SplitConfig{}, lim);
    CHECK(rl.anchors == 2);
    CHECK(rl.cell({0}, 0).n == 6);
  }
  SUBCASE("table") {
    const std::string t = format_table({r});
    CHECK(t.find("identity-ratio") != std::string::npos);
    CHECK(t.find("R_p/C") != std::string::npos);
    CHECK(t.find("1.0000 +- 0.0000") != std::string::npos);
  }
  SUBCASE("json round trip") {
    const std::string j = separation_to_json({r});
    const auto back = separation_from_json(j);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == r);
    CHECK(separation_to_json(back) == j);
    CHECK_THROWS_AS(separation_from_json("{\"version\":2,\"reports\":[]}"), ParseError);
    CHECK_THROWS_AS(separation_from_json("not json"), ParseError);
  }
}

TEST_CASE("modality pairs with three modalities") {
  const ModelGraph m = gen_synthetic_model(3, tiny_spec(3));
  const SampleSet s = gen_sample_set(3, m, 4);
  MetricConfig mc;
  mc.offset_count = 2;
  mc.perturb_sets = all_pairs(3);
  const SeparationReport r = perturbation_protocol(m, s, SplitConfig{}, mc);
  CHECK(r.cells.size() == 9);
  CHECK(r.cell({1, 2}, 0).label == "R_pL_p/C");
  CHECK(r.cell({1, 2}, 0).pcc_mean == 1.0);
  CHECK(r.cell({0, 1}, 2).pcc_mean == 1.0);
  CHECK(r.cell({0, 1}, 0).pcc_mean < 1.0);
}

TEST_CASE("decomposition report") {
  const ModelGraph m = gen_synthetic_model(4, tiny_spec());
  const SampleSet s = gen_sample_set(4, m, 1);
  const SplitConfig cfg = SplitConfig::make(BnRule::kUniform, LnRule::kIdentity);
  const Decomposition d = decompose(m, s.samples[0], cfg);
  const DecompositionReport r = make_decomposition_report(m, d, cfg, 0);
  CHECK(r.variant == "uniform-identity");
  CHECK(r.layers.size() == m.layers().size());
  CHECK(r.max_equality_residual == d.max_residual);
  CHECK(r.output == d.layers.back());
  const std::string j = decomposition_to_json(r);
  CHECK(decomposition_from_json(j) == r);
  CHECK(j.back() == '\n');
}
