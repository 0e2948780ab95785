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
#include "cli_util.hpp"
#include "doctest.h"
#include "lmd/heatmap.hpp"
#include "lmd/report.hpp"

using namespace lmd;
using lmd::test::CliSandbox;

namespace {

const char* kSmallModel = "gen-model --seed 11 --grid 8 --depth 2 --out model.json";

}  // namespace

TEST_CASE("generation is deterministic") {
  CliSandbox box("cli_gen");
  REQUIRE(box.run(kSmallModel) == 0);
  const std::string first = box.read("model.json");
  REQUIRE(box.run(kSmallModel) == 0);
  CHECK(box.read("model.json") == first);
  REQUIRE(box.run("gen-samples --model model.json --seed 3 --n 5 --out a.json") == 0);
  REQUIRE(box.run("gen-samples --model model.json --seed 3 --n 5 --out b.json", "LMD_THREADS=3") == 0);
  CHECK(box.read("a.json") == box.read("b.json"));
}

TEST_CASE("decompose, metrics and shapley") {
  CliSandbox box("cli_run");
  REQUIRE(box.run(kSmallModel) == 0);
  REQUIRE(box.run("gen-samples --model model.json --seed 3 --n 6 --out samples.json") == 0);

  REQUIRE(box.run("decompose --model model.json --samples samples.json --index 2 --out d1.json") == 0);
  REQUIRE(box.run("decompose --model model.json --samples samples.json --index 2 --out d4.json", "LMD_THREADS=4") == 0);
  CHECK(box.read("d1.json") == box.read("d4.json"));
  const DecompositionReport rep = decomposition_from_json(box.read("d1.json"));
  CHECK(rep.sample_index == 2);
  CHECK(rep.max_equality_residual <= 1e-9);
  CHECK(rep.output.size() == 3);

  REQUIRE(box.run("decompose --model model.json --samples samples.json --out h.json --heatmaps maps "
                  "--encoding signed-csv") == 0);
  const DecompositionReport h = decomposition_from_json(box.read("h.json"));
  CHECK(parse_csv(box.read("maps/component_C.csv")) == as_map2d(h.output.slot(0)));
  REQUIRE(box.run("decompose --model model.json --samples samples.json --out p.json --heatmaps maps") == 0);
  CHECK(box.read("maps/component_B.pgm").rfind("P5\n8 8\n255\n", 0) == 0);

  const std::string metrics = "metrics --model model.json --samples samples.json --offsets 2 "
                              "--variants identity-ratio,uniform-identity-sum --out m.json --table t.txt";
  REQUIRE(box.run(metrics, "LMD_THREADS=1") == 0);
  const std::string m1 = box.read("m.json"), t1 = box.read("t.txt");
  REQUIRE(box.run(metrics, "LMD_THREADS=4") == 0);
  CHECK(box.read("m.json") == m1);
  CHECK(box.read("t.txt") == t1);
  CHECK(separation_from_json(m1).size() == 2);

  REQUIRE(box.run("shapley --model model.json --samples samples.json --out s.json") == 0);
  CHECK(box.read("last_stderr.txt").find("coalition evaluations: 4") != std::string::npos);
  std::string method;
  CHECK(attribution_from_json(box.read("s.json"), &method).coalition_evaluations == 4);
  CHECK(method == "shapley");
  REQUIRE(box.run("shapley --model model.json --samples samples.json --hybrid --out hy.json") == 0);
  attribution_from_json(box.read("hy.json"), &method);
  CHECK(method.rfind("lmd+shap", 0) == 0);
}

TEST_CASE("exit codes") {
  CliSandbox box("cli_exit");
  REQUIRE(box.run(kSmallModel) == 0);
  REQUIRE(box.run("gen-samples --model model.json --seed 3 --n 3 --out samples.json") == 0);

  CHECK(box.run("--help") == 0);
  CHECK(box.run("") == 2);
  CHECK(box.run("frobnicate") == 2);
  CHECK(box.run("gen-model --out x.json") == 2);
  CHECK(box.run(kSmallModel, "LMD_THREADS=zero") == 2);
  CHECK(box.run("decompose --model missing.json --samples samples.json --out d.json") == 2);
  CHECK(box.run("decompose --model model.json --samples samples.json --index 9 --out d.json") == 2);
  CHECK(box.run("decompose --model model.json --samples samples.json --bn-rule bogus --out d.json") == 2);
  CHECK(box.run("decompose --model model.json --samples samples.json --act-rule sum --out d.json") == 0);

  std::ofstream(box.path("broken.json")) << "{\"version\":1,";
  CHECK(box.run("decompose --model broken.json --samples samples.json --out d.json") == 2);
  CHECK(box.read("last_stderr.txt").find("lmd:") == 0);

  CHECK(box.run("metrics --model model.json --samples samples.json --stride 3 --offsets 1 --out m.json") == 2);
  CHECK(box.run("metrics --model model.json --samples samples.json --variants --out m.json") == 2);

  CHECK(box.run("decompose --model model.json --samples samples.json --tolerance -1 --out d.json") == 3);
  CHECK(box.run("shapley --model model.json --samples samples.json --tolerance -1 --out s.json") == 3);
}
