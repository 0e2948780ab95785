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
#include <limits>

#include "doctest.h"
#include "lmd/error.hpp"
#include "lmd/heatmap.hpp"
#include "test_util.hpp"

using namespace lmd;
using namespace lmd::test;

TEST_CASE("map shapes") {
  CHECK(as_map2d(Tensor::vector({1, 2, 3})).shape() == Shape{1, 3});
  CHECK(as_map2d(Tensor::zeros({2, 3, 4})).shape() == Shape{6, 4});
  CHECK(as_map2d(Tensor::zeros({5, 4})).shape() == Shape{5, 4});
}

TEST_CASE("csv round trip is exact") {
  Rng rng(1);
  Tensor t = random_tensor(rng, {4, 5}, -1e3, 1e3);
  t[0] = 1e-300;
  t[1] = -0.0;
  t[2] = std::numeric_limits<double>::max();
  const std::string csv = to_csv(t);
  CHECK(csv.find("\r\n") != std::string::npos);
  const Tensor back = parse_csv(csv);
  CHECK(back == t);
  CHECK_THROWS_AS(parse_csv("1,2\r\n3\r\n"), ParseError);
  CHECK_THROWS_AS(parse_csv("1,x\r\n"), ParseError);
}

TEST_CASE("pgm encoding") {
  const Tensor m = Tensor::matrix({{-1, 0, 0.5}, {1, 2, -3}});
  const std::string pgm = to_pgm(m, HeatmapNorm::kMaxPositive);
  const std::string header = "P5\n3 2\n255\n";
  REQUIRE(pgm.substr(0, header.size()) == header);
  CHECK(pgm.size() == header.size() + 6);
  const auto px = [&](std::size_t i) { return static_cast<unsigned char>(pgm[header.size() + i]); };
  CHECK(px(0) == 0);
  CHECK(px(1) == 0);
  CHECK(px(2) == 64);
  CHECK(px(3) == 128);
  CHECK(px(4) == 255);
  CHECK(px(5) == 0);
}

TEST_CASE("normalizations") {
  const Tensor m = Tensor::vector({-2, 0, 1, 2});
  CHECK(normalize_to_bytes(m, HeatmapNorm::kMaxPositive) == std::vector<std::uint8_t>{0, 0, 128, 255});
  CHECK(normalize_to_bytes(m, HeatmapNorm::kSignedSymmetric) == std::vector<std::uint8_t>{0, 128, 191, 255});
  const auto sig = normalize_to_bytes(m, HeatmapNorm::kSigmoid);
  CHECK(sig[1] == 128);
  CHECK(sig[3] == static_cast<std::uint8_t>(std::lround(255.0 / (1.0 + std::exp(-2.0)))));
  // All-zero and all-negative maps stay black rather than dividing by zero.
  CHECK(normalize_to_bytes(Tensor::vector({0, 0}), HeatmapNorm::kMaxPositive) == std::vector<std::uint8_t>{0, 0});
  CHECK(normalize_to_bytes(Tensor::vector({-1, -2}), HeatmapNorm::kMaxPositive) == std::vector<std::uint8_t>{0, 0});
  CHECK(normalize_to_bytes(Tensor::vector({0, 0}), HeatmapNorm::kSignedSymmetric) ==
        std::vector<std::uint8_t>{128, 128});
}

TEST_CASE("option parsing") {
  CHECK(parse_heatmap_norm(to_string(HeatmapNorm::kSigmoid)) == HeatmapNorm::kSigmoid);
  CHECK(parse_heatmap_encoding(to_string(HeatmapEncoding::kSignedCsv)) == HeatmapEncoding::kSignedCsv);
  CHECK_THROWS_AS(parse_heatmap_norm("bogus"), ConfigError);
  CHECK_THROWS_AS(parse_heatmap_encoding("bogus"), ConfigError);
}
