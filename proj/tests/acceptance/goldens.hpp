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

// Frozen perturbed-cell values for the default synthetic net (seed 0,
// samples seed 1, N = 20, 4 offsets, identity-ratio).

#pragma once

namespace lmd::golden {

inline constexpr double kCpCPcc = -0.039556298198554204;
inline constexpr double kCpCMse = 0.26760634872659811;
inline constexpr double kRpRPcc = 0.0084717200394683646;
inline constexpr double kRpRMse = 0.029180671177376511;

}  // namespace lmd::golden
