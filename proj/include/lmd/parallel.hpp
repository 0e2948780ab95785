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

namespace lmd {

/// Number of worker threads parallel kernels may use.
int thread_count();

/// Caps parallelism. Values below 1 are treated as 1.
void set_thread_count(int n);

/// Reads LMD_THREADS (positive integer) and applies it. Returns false and
/// leaves the setting untouched when the variable is set but malformed.
bool configure_threads_from_env();

}  // namespace lmd
