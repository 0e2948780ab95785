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

#include "json.hpp"
#include "lmd/tensor.hpp"

namespace lmd::detail {

using Json = nlohmann::json;

/// Nested row-major lists.
Json tensor_to_nested(const Tensor& t);
/// Inverse of tensor_to_nested; `what` names the field in error messages.
Tensor tensor_from_nested(const Json& j, const std::string& what);

Json shape_to_json(const Shape& s);

/// Throws ParseError on malformed text.
Json parse_document(std::string_view doc);
/// Requires an object carrying "version": 1.
void check_version(const Json& j);

/// Compact, with a trailing newline.
std::string dump(const Json& j);

}  // namespace lmd::detail
