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

#include "lmd/report.hpp"

#include "json_util.hpp"
#include "lmd/error.hpp"

namespace lmd {

namespace {

using detail::Json;

std::string slot_label(std::size_t slot, std::size_t modalities) {
  return slot == modalities ? modality_label(ModalityId::bias()) : modality_label(ModalityId::modality(slot));
}

// [{"label": "C", "data": [...]}, ...]; the shape rides along so that
// zero-size components survive.
Json components_to_json(const std::vector<Tensor>& parts, const std::vector<std::string>& labels) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    arr.push_back({{"label", labels[i]}, {"shape", detail::shape_to_json(parts[i].shape())},
                   {"data", detail::tensor_to_nested(parts[i])}});
  }
  return arr;
}

Tensor component_from_json(const Json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("data")) throw ParseError(what + ": component needs 'data'");
  Tensor t = detail::tensor_from_nested(j["data"], what);
  if (j.contains("shape")) {
    const Shape shape = j["shape"].get<Shape>();
    if (t.empty() && shape_numel(shape) == 0) return Tensor(shape);
    if (t.shape() != shape) throw ParseError(what + ": data does not match declared shape");
  }
  return t;
}

const Json& field(const Json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j[key];
}

}  // namespace

DecompositionReport make_decomposition_report(const ModelGraph& model, const Decomposition& dec,
                                              const SplitConfig& cfg, std::size_t sample_index) {
  DecompositionReport r;
  r.variant = cfg.name();
  r.sample_index = sample_index;
  r.epsilon = cfg.epsilon;
  r.output = dec.at(model.output_index());
  for (std::size_t i = 0; i < dec.layers.size(); ++i) {
    r.layers.push_back({model.layer(i).id, dec.residuals[i]});
    r.clamped += dec.state.layer(i).clamped;
  }
  r.max_equality_residual = dec.max_residual;
  r.worst_layer = model.layer(dec.worst_layer).id;
  return r;
}

std::string decomposition_to_json(const DecompositionReport& r) {
  Json j;
  j["version"] = 1;
  j["variant"] = r.variant;
  j["sample_index"] = r.sample_index;
  j["epsilon"] = r.epsilon;
  std::vector<std::string> labels;
  for (std::size_t s = 0; s < r.output.size(); ++s) labels.push_back(slot_label(s, r.output.modalities()));
  j["output_shape"] = detail::shape_to_json(r.output.shape());
  j["components"] = components_to_json(r.output.components(), labels);
  j["layers"] = Json::array();
  for (const auto& l : r.layers) j["layers"].push_back({{"id", l.id}, {"equality_residual", l.residual}});
  j["max_equality_residual"] = r.max_equality_residual;
  j["worst_layer"] = r.worst_layer;
  j["clamped"] = r.clamped;
  return detail::dump(j);
}

DecompositionReport decomposition_from_json(std::string_view doc) {
  const Json j = detail::parse_document(doc);
  detail::check_version(j);
  try {
    DecompositionReport r;
    r.variant = field(j, "variant").get<std::string>();
    r.sample_index = field(j, "sample_index").get<std::size_t>();
    r.epsilon = field(j, "epsilon").get<double>();
    std::vector<Tensor> parts;
    for (const auto& c : field(j, "components")) parts.push_back(component_from_json(c, "components"));
    r.output = DecomposedTensor(std::move(parts));
    for (const auto& l : field(j, "layers")) {
      r.layers.push_back({field(l, "id").get<std::string>(), field(l, "equality_residual").get<double>()});
    }
    r.max_equality_residual = field(j, "max_equality_residual").get<double>();
    r.worst_layer = field(j, "worst_layer").get<std::string>();
    r.clamped = field(j, "clamped").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("decomposition report: ") + e.what());
  }
}

std::string separation_to_json(const std::vector<SeparationReport>& reports) {
  Json j;
  j["version"] = 1;
  j["reports"] = Json::array();
  for (const auto& r : reports) {
    Json jr;
    jr["variant"] = r.variant;
    jr["anchors"] = r.anchors;
    jr["offsets"] = r.offsets;
    jr["cells"] = Json::array();
    for (const auto& c : r.cells) {
      Json perturbed = Json::array();
      for (auto m : c.perturbed) perturbed.push_back(modality_label(ModalityId::modality(m)));
      jr["cells"].push_back({{"label", c.label},
                             {"perturbed", perturbed},
                             {"observed", modality_label(ModalityId::modality(c.observed))},
                             {"pcc_mean", c.pcc_mean},
                             {"pcc_std", c.pcc_std},
                             {"mse_mean", c.mse_mean},
                             {"mse_std", c.mse_std},
                             {"n", c.n},
                             {"n_degenerate", c.n_degenerate}});
    }
    j["reports"].push_back(std::move(jr));
  }
  return detail::dump(j);
}

namespace {

std::size_t modality_from_label(const std::string& label) {
  for (std::size_t m = 0; m < 64; ++m)
    if (modality_label(ModalityId::modality(m)) == label) return m;
  throw ParseError("unknown modality label '" + label + "'");
}

}  // namespace

std::vector<SeparationReport> separation_from_json(std::string_view doc) {
  const Json j = detail::parse_document(doc);
  detail::check_version(j);
  try {
    std::vector<SeparationReport> out;
    for (const auto& jr : field(j, "reports")) {
      SeparationReport r;
      r.variant = field(jr, "variant").get<std::string>();
      r.anchors = field(jr, "anchors").get<std::size_t>();
      r.offsets = field(jr, "offsets").get<std::vector<std::size_t>>();
      for (const auto& jc : field(jr, "cells")) {
        SeparationCell c;
        c.label = field(jc, "label").get<std::string>();
        for (const auto& p : field(jc, "perturbed")) c.perturbed.push_back(modality_from_label(p.get<std::string>()));
        c.observed = modality_from_label(field(jc, "observed").get<std::string>());
        c.pcc_mean = field(jc, "pcc_mean").get<double>();
        c.pcc_std = field(jc, "pcc_std").get<double>();
        c.mse_mean = field(jc, "mse_mean").get<double>();
        c.mse_std = field(jc, "mse_std").get<double>();
        c.n = field(jc, "n").get<std::size_t>();
        c.n_degenerate = field(jc, "n_degenerate").get<std::size_t>();
        r.cells.push_back(std::move(c));
      }
      out.push_back(std::move(r));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("separation report: ") + e.what());
  }
}

std::string attribution_to_json(const Attribution& a, const std::string& method) {
  Json j;
  j["version"] = 1;
  j["method"] = method;
  std::vector<Tensor> parts = a.per_modality;
  std::vector<std::string> labels;
  for (std::size_t m = 0; m < parts.size(); ++m) labels.push_back(modality_label(ModalityId::modality(m)));
  parts.push_back(a.base);
  labels.push_back("base");
  j["output_shape"] = detail::shape_to_json(a.full.shape());
  j["components"] = components_to_json(parts, labels);
  j["full"] = {{"shape", detail::shape_to_json(a.full.shape())}, {"data", detail::tensor_to_nested(a.full)}};
  j["coalition_evaluations"] = a.coalition_evaluations;
  j["efficiency_residual"] = a.efficiency_residual;
  return detail::dump(j);
}

Attribution attribution_from_json(std::string_view doc, std::string* method) {
  const Json j = detail::parse_document(doc);
  detail::check_version(j);
  try {
    Attribution a;
    if (method) *method = field(j, "method").get<std::string>();
    const Json& comps = field(j, "components");
    if (comps.size() < 2) throw ParseError("attribution needs at least one modality and a base");
    for (std::size_t i = 0; i + 1 < comps.size(); ++i) a.per_modality.push_back(component_from_json(comps[i], "components"));
    a.base = component_from_json(comps.back(), "base");
    a.full = component_from_json(field(j, "full"), "full");
    a.coalition_evaluations = field(j, "coalition_evaluations").get<std::size_t>();
    a.efficiency_residual = field(j, "efficiency_residual").get<double>();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("attribution: ") + e.what());
  }
}

}  // namespace lmd
