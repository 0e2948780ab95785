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

#include <stdexcept>
#include <string>

namespace lmd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents do not agree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A model, sample or report document could not be parsed or validated.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// An invalid combination of options (split rules, generator spec, metric offsets).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical contract was violated: non-finite activation or an equality
/// residual above tolerance. Carries the offending layer id.
class NumericError : public Error {
 public:
  NumericError(const std::string& layer, const std::string& what)
      : Error(what + " (layer '" + layer + "')"), layer_(layer) {}

  const std::string& layer() const { return layer_; }

 private:
  std::string layer_;
};

}  // namespace lmd
