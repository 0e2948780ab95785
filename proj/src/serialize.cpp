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

#include "lmd/serialize.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "lmd/error.hpp"

namespace lmd {

namespace detail {

namespace {

void nested_into(const Tensor& t, std::size_t axis, std::size_t offset, std::size_t stride, Json& out) {
  out = Json::array();
  const std::size_t n = t.extent(axis);
  const std::size_t inner = stride / n;
  for (std::size_t i = 0; i < n; ++i) {
    if (axis + 1 == t.rank()) {
      out.push_back(t[offset + i]);
    } else {
      Json child;
      nested_into(t, axis + 1, offset + i * inner, inner, child);
      out.push_back(std::move(child));
    }
  }
}

void flatten_into(const Json& j, const Shape& shape, std::size_t axis, std::vector<double>& data,
                  const std::string& what) {
  if (!j.is_array() || j.size() != shape[axis]) {
    throw ParseError(what + ": ragged nested list at depth " + std::to_string(axis));
  }
  for (const auto& e : j) {
    if (axis + 1 == shape.size()) {
      if (!e.is_number()) throw ParseError(what + ": expected a number");
      data.push_back(e.get<double>());
    } else {
      flatten_into(e, shape, axis + 1, data, what);
    }
  }
}

}  // namespace

Json tensor_to_nested(const Tensor& t) {
  if (t.empty()) return Json::array();
  Json out;
  nested_into(t, 0, 0, t.numel(), out);
  return out;
}

Tensor tensor_from_nested(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected a nested number list");
  if (j.empty()) return Tensor();
  Shape shape;
  const Json* cur = &j;
  while (cur->is_array()) {
    if (cur->empty()) throw ParseError(what + ": empty nested list");
    shape.push_back(cur->size());
    cur = &(*cur)[0];
  }
  std::vector<double> data;
  data.reserve(shape_numel(shape));
  flatten_into(j, shape, 0, data, what);
  return Tensor(std::move(shape), std::move(data));
}

Json shape_to_json(const Shape& s) {
  Json out = Json::array();
  for (auto e : s) out.push_back(e);
  return out;
}

std::string dump(const Json& j) { return j.dump() + "\n"; }

Json parse_document(std::string_view doc) {
  try {
    return Json::parse(doc);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

void check_version(const Json& j) {
  if (!j.is_object()) throw ParseError("document must be a JSON object");
  if (!j.contains("version") || j["version"] != 1) throw ParseError("unsupported or missing document version");
}


}  // namespace detail

namespace {

using detail::Json;

Json layer_to_json(const LayerSpec& l) {
  Json j;
  j["id"] = l.id;
  j["kind"] = std::string(kind_name(l.kind));
  j["inputs"] = l.inputs;
  switch (l.kind) {
    case LayerKind::kInput:
      j["modality"] = l.modality;
      j["shape"] = detail::shape_to_json(l.input_shape);
      break;
    case LayerKind::kConv2d:
      j["stride"] = l.conv.stride;
      j["padding"] = l.conv.padding;
      [[fallthrough]];
    case LayerKind::kDense:
      j["weight"] = detail::tensor_to_nested(l.weight);
      j["bias"] = detail::tensor_to_nested(l.bias);
      break;
    case LayerKind::kBatchNorm:
      j["mean"] = detail::tensor_to_nested(l.mean);
      j["var"] = detail::tensor_to_nested(l.var);
      [[fallthrough]];
    case LayerKind::kLayerNorm:
    case LayerKind::kInstanceNorm:
      j["gamma"] = detail::tensor_to_nested(l.gamma);
      j["beta"] = detail::tensor_to_nested(l.beta);
      j["eps"] = l.eps;
      if (l.kind == LayerKind::kLayerNorm) j["axes"] = l.axes;
      break;
    case LayerKind::kConcatFusion:
      j["axis"] = l.axis;
      break;
    case LayerKind::kMatMul:
      j["transpose_a"] = l.transpose_a;
      j["transpose_b"] = l.transpose_b;
      break;
    default:
      break;
  }
  return j;
}

template <typename T>
T field(const Json& j, const char* key, const std::string& id) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError("layer '" + id + "': missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("layer '" + id + "': field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const Json& j, const char* key, T fallback, const std::string& id) {
  return j.contains(key) ? field<T>(j, key, id) : fallback;
}

Tensor tensor_field(const Json& j, const char* key, const std::string& id) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError("layer '" + id + "': missing field '" + key + "'");
  return detail::tensor_from_nested(*it, "layer '" + id + "' field '" + key + "'");
}

LayerSpec layer_from_json(const Json& j, std::size_t position) {
  if (!j.is_object()) throw ParseError("layer at position " + std::to_string(position) + " is not an object");
  LayerSpec l;
  if (!j.contains("id") || !j["id"].is_string()) {
    throw ParseError("layer at position " + std::to_string(position) + " has no string id");
  }
  l.id = j["id"].get<std::string>();
  const auto kind = kind_from_name(field<std::string>(j, "kind", l.id));
  if (!kind) throw ParseError("layer '" + l.id + "': unknown kind '" + j["kind"].get<std::string>() + "'");
  l.kind = *kind;
  l.inputs = field_or<std::vector<std::string>>(j, "inputs", {}, l.id);
  switch (l.kind) {
    case LayerKind::kInput:
      l.modality = field<std::size_t>(j, "modality", l.id);
      l.input_shape = field<Shape>(j, "shape", l.id);
      break;
    case LayerKind::kConv2d:
      l.conv.stride = field_or<std::size_t>(j, "stride", 1, l.id);
      l.conv.padding = field_or<std::size_t>(j, "padding", 0, l.id);
      [[fallthrough]];
    case LayerKind::kDense:
      l.weight = tensor_field(j, "weight", l.id);
      l.bias = tensor_field(j, "bias", l.id);
      break;
    case LayerKind::kBatchNorm:
      l.mean = tensor_field(j, "mean", l.id);
      l.var = tensor_field(j, "var", l.id);
      [[fallthrough]];
    case LayerKind::kLayerNorm:
    case LayerKind::kInstanceNorm:
      l.gamma = tensor_field(j, "gamma", l.id);
      l.beta = tensor_field(j, "beta", l.id);
      l.eps = field_or<double>(j, "eps", 1e-5, l.id);
      if (l.kind == LayerKind::kLayerNorm) l.axes = field<std::vector<std::size_t>>(j, "axes", l.id);
      break;
    case LayerKind::kConcatFusion:
      l.axis = field_or<std::size_t>(j, "axis", 0, l.id);
      break;
    case LayerKind::kMatMul:
      l.transpose_a = field_or<bool>(j, "transpose_a", false, l.id);
      l.transpose_b = field_or<bool>(j, "transpose_b", false, l.id);
      break;
    default:
      break;
  }
  return l;
}

// Kahn's algorithm, stable with respect to document order.
std::vector<LayerSpec> topological_order(std::vector<LayerSpec> layers) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!pos.emplace(layers[i].id, i).second) throw ParseError("layer '" + layers[i].id + "': duplicate layer id");
  }
  std::vector<std::size_t> pending(layers.size(), 0);
  std::vector<std::vector<std::size_t>> consumers(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (const auto& src : layers[i].inputs) {
      auto it = pos.find(src);
      if (it == pos.end()) throw ParseError("layer '" + layers[i].id + "': input '" + src + "' does not exist");
      ++pending[i];
      consumers[it->second].push_back(i);
    }
  }
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (pending[i] == 0) ready.insert(i);
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t i = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(i);
    for (auto c : consumers[i])
      if (--pending[c] == 0) ready.insert(c);
  }
  if (order.size() != layers.size()) {
    // Walk upstream through unresolved layers until one repeats: it lies on a cycle.
    std::size_t cur = 0;
    while (pending[cur] == 0) ++cur;
    std::vector<bool> seen(layers.size(), false);
    while (!seen[cur]) {
      seen[cur] = true;
      for (const auto& src : layers[cur].inputs) {
        const std::size_t u = pos[src];
        if (pending[u] != 0) {
          cur = u;
          break;
        }
      }
    }
    throw ParseError("layer '" + layers[cur].id + "': part of a cycle");
  }
  std::vector<LayerSpec> sorted;
  sorted.reserve(layers.size());
  for (auto i : order) sorted.push_back(std::move(layers[i]));
  return sorted;
}

}  // namespace

std::string save_model(const ModelGraph& model) {
  Json j;
  j["version"] = 1;
  j["modalities"] = model.modalities();
  j["layers"] = Json::array();
  for (const auto& l : model.layers()) j["layers"].push_back(layer_to_json(l));
  j["output"] = model.output();
  return detail::dump(j);
}

ModelGraph load_model(std::string_view document) {
  const Json j = detail::parse_document(document);
  detail::check_version(j);
  if (!j.contains("modalities") || !j["modalities"].is_number_unsigned()) {
    throw ParseError("model document is missing the modality count 'modalities'");
  }
  if (!j.contains("layers") || !j["layers"].is_array()) throw ParseError("model document has no 'layers' array");
  if (!j.contains("output") || !j["output"].is_string()) throw ParseError("model document has no 'output' id");
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < j["layers"].size(); ++i) layers.push_back(layer_from_json(j["layers"][i], i));
  return ModelGraph(j["modalities"].get<std::size_t>(), topological_order(std::move(layers)),
                    j["output"].get<std::string>());
}

std::string save_samples(const SampleSet& set) {
  Json j;
  j["version"] = 1;
  j["n"] = set.size();
  j["modalities"] = set.modalities;
  j["samples"] = Json::array();
  for (const auto& s : set.samples) {
    Json entry = Json::object();
    for (std::size_t m = 0; m < s.size(); ++m) entry[modality_label(ModalityId::modality(m))] = detail::tensor_to_nested(s[m]);
    j["samples"].push_back(std::move(entry));
  }
  return detail::dump(j);
}

SampleSet load_samples(std::string_view document) {
  const Json j = detail::parse_document(document);
  detail::check_version(j);
  if (!j.contains("samples") || !j["samples"].is_array()) throw ParseError("sample document has no 'samples' array");
  SampleSet set;
  const auto& arr = j["samples"];
  if (j.contains("modalities")) {
    set.modalities = j["modalities"].get<std::size_t>();
  } else {
    set.modalities = arr.empty() ? 0 : arr[0].size();
  }
  if (j.contains("n") && j["n"].get<std::size_t>() != arr.size()) {
    throw ParseError("sample document declares n=" + std::to_string(j["n"].get<std::size_t>()) + " but holds " +
                     std::to_string(arr.size()) + " samples");
  }
  for (std::size_t k = 0; k < arr.size(); ++k) {
    ModalityInputs inputs;
    for (std::size_t m = 0; m < set.modalities; ++m) {
      const std::string key = modality_label(ModalityId::modality(m));
      if (!arr[k].contains(key)) {
        throw ParseError("sample " + std::to_string(k) + " has no '" + key + "' modality");
      }
      inputs.push_back(detail::tensor_from_nested(arr[k][key], "sample " + std::to_string(k) + " modality " + key));
    }
    set.samples.push_back(std::move(inputs));
  }
  return set;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw ParseError("failed writing '" + path + "'");
}

}  // namespace lmd
