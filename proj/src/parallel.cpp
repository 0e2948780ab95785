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

#include "lmd/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace lmd {

namespace {

int default_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::atomic<int>& threads() {
  static std::atomic<int> n{default_threads()};
  return n;
}

}  // namespace

int thread_count() { return threads().load(std::memory_order_relaxed); }

void set_thread_count(int n) { threads().store(n < 1 ? 1 : n, std::memory_order_relaxed); }

bool configure_threads_from_env() {
  const char* raw = std::getenv("LMD_THREADS");
  if (raw == nullptr || *raw == '\0') return true;
  try {
    std::size_t used = 0;
    const int n = std::stoi(raw, &used);
    if (used != std::string(raw).size() || n < 1) return false;
    set_thread_count(n);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace lmd
