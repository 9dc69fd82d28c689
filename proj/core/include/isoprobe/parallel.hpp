// Copyright 2026 The isoprobe authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#ifndef ISOPROBE_PARALLEL_HPP
#define ISOPROBE_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace isoprobe {

// Worker count used by parallel_chunks. Defaults to the hardware thread
// count; the CLI overrides it from --threads. Always >= 1.
int num_threads();
void set_num_threads(int n);

// Runs body(chunk) for every chunk in [0, n_chunks). Chunks are claimed from
// a shared counter, so only the assignment of chunks to threads varies with
// the worker count. Every numeric contract in this library keeps chunk
// boundaries fixed and writes per-chunk results to disjoint slots; callers
// combine slots in chunk order, which makes results identical for any
// thread count.
void parallel_chunks(std::int64_t n_chunks,
                     const std::function<void(std::int64_t)>& body);

inline std::int64_t chunk_count(std::int64_t n, std::int64_t chunk_size) {
  return (n + chunk_size - 1) / chunk_size;
}

}  // namespace isoprobe

#endif  // ISOPROBE_PARALLEL_HPP
