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

// lmd: generate synthetic fusion models, decompose predictions by modality,
// and score separation.
//
// Exit status: 0 success, 2 invalid input or flags, 3 equality residual
// above tolerance or non-finite values, 1 anything else.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lmd/baselines.hpp"
#include "lmd/error.hpp"
#include "lmd/heatmap.hpp"
#include "lmd/metrics.hpp"
#include "lmd/parallel.hpp"
#include "lmd/report.hpp"
#include "lmd/serialize.hpp"
#include "lmd/synth.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

// Residual violation detected after a successful run.
struct ContractViolation {
  std::string message;
};

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = s.find(sep, start);
    const std::string part = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!part.empty()) out.push_back(part);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

std::vector<lmd::LayerKind> parse_kinds(const std::string& list, bool norms) {
  std::vector<lmd::LayerKind> out;
  if (list == "none") return out;
  for (const auto& name : split_list(list)) {
    const auto kind = lmd::kind_from_name(name);
    const bool ok = kind && (norms ? (*kind == lmd::LayerKind::kBatchNorm || *kind == lmd::LayerKind::kLayerNorm ||
                                      *kind == lmd::LayerKind::kInstanceNorm)
                                   : (*kind == lmd::LayerKind::kReLU || *kind == lmd::LayerKind::kGELU));
    if (!ok) throw lmd::ConfigError("'" + name + "' is not a valid " + (norms ? "norm" : "activation"));
    out.push_back(*kind);
  }
  return out;
}

std::size_t parse_modality(const std::string& label, std::size_t modalities) {
  for (std::size_t m = 0; m < modalities; ++m)
    if (lmd::modality_label(lmd::ModalityId::modality(m)) == label) return m;
  throw lmd::ConfigError("unknown modality '" + label + "'");
}

// "single" (default), "pair", or comma-separated sets such as "R" or "R+L".
std::vector<std::vector<std::size_t>> parse_perturb(const std::string& spec, std::size_t modalities) {
  if (spec == "single") return {};
  if (spec == "pair") return lmd::all_pairs(modalities);
  std::vector<std::vector<std::size_t>> sets;
  for (const auto& group : split_list(spec)) {
    std::vector<std::size_t> set;
    for (const auto& label : split_list(group, '+')) set.push_back(parse_modality(label, modalities));
    sets.push_back(std::move(set));
  }
  return sets;
}

lmd::SampleSet load_sample_file(const std::string& path) { return lmd::load_samples(lmd::read_file(path)); }

const lmd::ModalityInputs& pick(const lmd::SampleSet& s, std::size_t index) {
  if (index >= s.size()) {
    throw lmd::ConfigError("sample index " + std::to_string(index) + " out of range (N = " + std::to_string(s.size()) + ")");
  }
  return s.samples[index];
}

struct RuleFlags {
  std::string bn = "identity";
  std::string ln = "ratio";
  std::string act = "none";
  double epsilon = 1e-6;

  void add(CLI::App* cmd) {
    cmd->add_option("--bn-rule", bn, "BatchNorm constant split: identity|uniform")->capture_default_str();
    cmd->add_option("--ln-rule", ln, "LayerNorm rule: ratio|identity|uniform")->capture_default_str();
    cmd->add_option("--act-rule", act, "activation bias rule: none|sum|ratio")->capture_default_str();
    cmd->add_option("--epsilon", epsilon, "chord-slope stabilizer")->capture_default_str();
  }
  lmd::SplitConfig config() const {
    return lmd::SplitConfig::make(lmd::parse_bn_rule(bn), lmd::parse_ln_rule(ln), lmd::parse_act_rule(act), epsilon);
  }
};

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
  } else {
    lmd::write_file(path, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (!lmd::configure_threads_from_env()) {
    std::cerr << "lmd: LMD_THREADS must be a positive integer\n";
    return kExitValidation;
  }

  CLI::App app{"Layer-wise modality decomposition for multimodal fusion models"};
  app.require_subcommand(1);

  // gen-model
  std::uint64_t seed = 0;
  lmd::SyntheticSpec spec;
  std::string norm_list = "batchnorm,layernorm,instancenorm";
  std::string act_list = "relu,gelu";
  bool no_bias = false;
  std::string out_path;
  auto* gen_model = app.add_subcommand("gen-model", "write a seeded synthetic fusion model");
  gen_model->add_option("--seed", seed, "random seed")->required();
  gen_model->add_option("--modalities", spec.modalities, "number of input modalities")->capture_default_str();
  gen_model->add_option("--depth", spec.depth, "trunk blocks after fusion")->capture_default_str();
  gen_model->add_option("--grid", spec.grid, "BEV grid side")->capture_default_str();
  gen_model->add_option("--norm", norm_list, "trunk norms, comma-separated, or none")->capture_default_str();
  gen_model->add_option("--activation", act_list, "trunk activations, comma-separated, or none")->capture_default_str();
  gen_model->add_flag("--attention", spec.include_attention, "append a MatMul/Softmax attention block");
  gen_model->add_flag("--no-bias", no_bias, "zero every Dense/Conv2d bias");
  gen_model->add_option("--out", out_path, "output model JSON ('-' for stdout)")->required();

  // gen-samples
  std::string model_path;
  std::size_t count = 20;
  auto* gen_samples = app.add_subcommand("gen-samples", "write a seeded sample set shaped for a model");
  gen_samples->add_option("--model", model_path, "model JSON")->required();
  gen_samples->add_option("--seed", seed, "random seed")->required();
  gen_samples->add_option("--n", count, "number of samples")->capture_default_str();
  gen_samples->add_option("--out", out_path, "output samples JSON ('-' for stdout)")->required();

  // decompose
  std::string samples_path;
  std::size_t index = 0;
  RuleFlags rules;
  double tolerance = 1e-9;
  std::string heatmap_dir;
  std::string norm_mode = "max-positive";
  std::string encoding = "positive-pgm";
  auto* decompose = app.add_subcommand("decompose", "split one prediction into modality and bias components");
  decompose->add_option("--model", model_path, "model JSON")->required();
  decompose->add_option("--samples", samples_path, "samples JSON")->required();
  decompose->add_option("--index", index, "sample index")->capture_default_str();
  rules.add(decompose);
  decompose->add_option("--tolerance", tolerance, "maximum relative equality residual")->capture_default_str();
  decompose->add_option("--out", out_path, "output report JSON ('-' for stdout)")->required();
  decompose->add_option("--heatmaps", heatmap_dir, "directory for one map per component");
  decompose->add_option("--norm", norm_mode, "max-positive|signed-symmetric|sigmoid")->capture_default_str();
  decompose->add_option("--encoding", encoding, "positive-pgm|signed-csv")->capture_default_str();

  // metrics
  std::string perturb = "single";
  std::size_t stride = 0;
  std::size_t offsets = 0;
  std::string variants = "identity-ratio";
  std::size_t limit = 0;
  bool positive = false;
  std::string table_path;
  auto* metrics = app.add_subcommand("metrics", "modality-replacement separation metrics");
  metrics->add_option("--model", model_path, "model JSON")->required();
  metrics->add_option("--samples", samples_path, "samples JSON")->required();
  metrics->add_option("--perturb", perturb, "single|pair|sets like R or R+L, comma-separated")->capture_default_str();
  metrics->add_option("--stride", stride, "offset stride s (default scales with N)");
  metrics->add_option("--offsets", offsets, "offset count K (default scales with N)");
  metrics->add_option("--variants", variants, "comma-separated <bn>-<ln>[-<act>] names")->capture_default_str();
  metrics->add_option("--epsilon", rules.epsilon, "chord-slope stabilizer")->capture_default_str();
  metrics->add_option("--limit", limit, "anchor samples to use (0 = all)")->capture_default_str();
  metrics->add_flag("--positive-part", positive, "correlate positive parts instead of signed maps");
  metrics->add_option("--out", out_path, "output report JSON ('-' for stdout)")->required();
  metrics->add_option("--table", table_path, "also write the text table here");

  // shapley
  bool hybrid = false;
  std::string redistribution = "shapley";
  auto* shap = app.add_subcommand("shapley", "exact modality-level Shapley attribution");
  shap->add_option("--model", model_path, "model JSON")->required();
  shap->add_option("--samples", samples_path, "samples JSON")->required();
  shap->add_option("--index", index, "sample index")->capture_default_str();
  shap->add_flag("--hybrid", hybrid, "redistribute the LMD bias component instead");
  shap->add_option("--redistribution", redistribution, "hybrid split: shapley|proportional")->capture_default_str();
  rules.add(shap);
  shap->add_option("--tolerance", tolerance, "maximum relative efficiency residual")->capture_default_str();
  shap->add_option("--out", out_path, "output attribution JSON ('-' for stdout)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*gen_model) {
      spec.norms = parse_kinds(norm_list, true);
      spec.activations = parse_kinds(act_list, false);
      spec.layer_bias = !no_bias;
      write_output(out_path, lmd::save_model(lmd::gen_synthetic_model(seed, spec)));
    } else if (*gen_samples) {
      const lmd::ModelGraph model = lmd::load_model(lmd::read_file(model_path));
      write_output(out_path, lmd::save_samples(lmd::gen_sample_set(seed, model, count)));
    } else if (*decompose) {
      const lmd::ModelGraph model = lmd::load_model(lmd::read_file(model_path));
      const lmd::SampleSet samples = load_sample_file(samples_path);
      const lmd::SplitConfig cfg = rules.config();
      const lmd::HeatmapNorm hm_norm = lmd::parse_heatmap_norm(norm_mode);
      const lmd::HeatmapEncoding hm_enc = lmd::parse_heatmap_encoding(encoding);
      const lmd::Decomposition dec = lmd::decompose(model, pick(samples, index), cfg);
      const lmd::DecompositionReport report = lmd::make_decomposition_report(model, dec, cfg, index);
      write_output(out_path, lmd::decomposition_to_json(report));
      if (!heatmap_dir.empty()) {
        std::filesystem::create_directories(heatmap_dir);
        const auto& out = report.output;
        for (std::size_t s = 0; s < out.size(); ++s) {
          const std::string label = s == out.modalities() ? lmd::modality_label(lmd::ModalityId::bias())
                                                          : lmd::modality_label(lmd::ModalityId::modality(s));
          const lmd::Tensor map = lmd::as_map2d(out.slot(s));
          const std::filesystem::path base = std::filesystem::path(heatmap_dir) / ("component_" + label);
          if (hm_enc == lmd::HeatmapEncoding::kPositivePgm) {
            lmd::write_file(base.string() + ".pgm", lmd::to_pgm(map, hm_norm));
          } else {
            lmd::write_file(base.string() + ".csv", lmd::to_csv(map));
          }
        }
      }
      if (!(report.max_equality_residual <= tolerance)) {
        throw ContractViolation{"equality residual " + std::to_string(report.max_equality_residual) + " at layer '" +
                                report.worst_layer + "' exceeds tolerance"};
      }
    } else if (*metrics) {
      const lmd::ModelGraph model = lmd::load_model(lmd::read_file(model_path));
      const lmd::SampleSet samples = load_sample_file(samples_path);
      lmd::MetricConfig mcfg = lmd::MetricConfig::defaults_for(samples.size());
      if (stride) mcfg.offset_stride = stride;
      if (offsets) mcfg.offset_count = offsets;
      mcfg.perturb_sets = parse_perturb(perturb, model.modalities());
      mcfg.sample_limit = limit;
      mcfg.positive_part = positive;
      std::vector<lmd::SplitConfig> cfgs;
      for (const auto& name : split_list(variants)) cfgs.push_back(lmd::SplitConfig::parse(name, rules.epsilon));
      const auto reports = lmd::variant_matrix(model, samples, cfgs, mcfg);
      write_output(out_path, lmd::separation_to_json(reports));
      const std::string table = lmd::format_table(reports);
      if (!table_path.empty()) lmd::write_file(table_path, table);
      if (out_path != "-") std::cout << table;
    } else if (*shap) {
      const lmd::ModelGraph model = lmd::load_model(lmd::read_file(model_path));
      const lmd::SampleSet samples = load_sample_file(samples_path);
      const auto& inputs = pick(samples, index);
      lmd::Attribution a;
      std::string method = "shapley";
      if (hybrid) {
        const lmd::Redistribution how =
            redistribution == "shapley"        ? lmd::Redistribution::kShapley
            : redistribution == "proportional" ? lmd::Redistribution::kProportional
                                               : throw lmd::ConfigError("unknown redistribution '" + redistribution + "'");
        const lmd::SplitConfig cfg = rules.config();
        a = lmd::lmd_shap(model, inputs, cfg, how);
        method = "lmd+shap:" + cfg.name() + ":" + redistribution;
      } else {
        a = lmd::shapley(model, inputs);
      }
      write_output(out_path, lmd::attribution_to_json(a, method));
      std::cerr << "coalition evaluations: " << a.coalition_evaluations << "\n"
                << "efficiency residual: " << a.efficiency_residual << "\n";
      if (!(a.efficiency_residual <= tolerance)) {
        throw ContractViolation{"efficiency residual " + std::to_string(a.efficiency_residual) + " exceeds tolerance"};
      }
    }
  } catch (const ContractViolation& e) {
    std::cerr << "lmd: " << e.message << "\n";
    return kExitNumeric;
  } catch (const lmd::NumericError& e) {
    std::cerr << "lmd: numerical failure at layer '" << e.layer() << "': " << e.what() << "\n";
    return kExitNumeric;
  } catch (const lmd::Error& e) {
    std::cerr << "lmd: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "lmd: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
