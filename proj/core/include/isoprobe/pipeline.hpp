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

#ifndef ISOPROBE_PIPELINE_HPP
#define ISOPROBE_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "isoprobe/error.hpp"
#include "isoprobe/matrix.hpp"
#include "isoprobe/transforms.hpp"

namespace isoprobe {

// One step of a transform pipeline. Valid ops: zero_mean, clustering_zm,
// global_abtt, cluster_based, remove_least. Params: k (default 27), remove
// (default 12), selector ("top"|"least", cluster_based only).
struct PipelineStep {
  std::string op;
  nlohmann::json params;
  std::uint64_t seed = 0;
};

// An ordered list of steps parsed from a JSON array:
//   [{"op": "...", "params": {...}, "seed": ...}, ...]
// Steps without a seed inherit default_seed. Unknown ops or params are
// contract errors.
class Pipeline {
 public:
  Pipeline() = default;

  static Pipeline parse(const nlohmann::json& config,
                        std::uint64_t default_seed);
  static Pipeline load(const std::filesystem::path& path,
                       std::uint64_t default_seed);

  Matrix apply(const Matrix& m, Warnings* warnings = nullptr) const;

  bool empty() const { return steps_.empty(); }
  const std::vector<PipelineStep>& steps() const { return steps_; }

  // Config echo with all defaults filled in.
  nlohmann::json to_json() const;

 private:
  std::vector<PipelineStep> steps_;
};

}  // namespace isoprobe

#endif  // ISOPROBE_PIPELINE_HPP
