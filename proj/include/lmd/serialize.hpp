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

#pragma once

#include <string>
#include <string_view>

#include "lmd/model.hpp"
#include "lmd/synth.hpp"

namespace lmd {

// Model document:
//   {"version":1, "modalities":M, "layers":[{"id","kind","inputs",...params}], "output":id}
// Tensors are nested JSON number lists in row-major order. Doubles are
// written in shortest round-trip form, so weights reload bit-exactly.
//
// Sample document:
//   {"version":1, "n":N, "modalities":M, "samples":[{"C":[...], "R":[...]}, ...]}
// keyed by modality label (see modality_label).

std::string save_model(const ModelGraph& model);

/// Accepts layers in any order; sorts them topologically. Throws ParseError
/// naming the layer for unknown kinds, dangling inputs and cycles.
ModelGraph load_model(std::string_view document);

std::string save_samples(const SampleSet& samples);
SampleSet load_samples(std::string_view document);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace lmd
