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

#include "isoprobe/pipeline.hpp"

#include <fstream>
#include <set>

namespace isoprobe {

namespace {

using nlohmann::json;

std::int64_t step_int(const json& params, const std::string& key,
                      std::int64_t fallback, std::int64_t min_value,
                      const std::string& op) {
  if (!params.contains(key)) return fallback;
  const json& v = params.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw_contract("pipeline step '" + op + "': param '" + key +
                   "' must be an integer");
  std::int64_t n = v.get<std::int64_t>();
  if (n < min_value)
    throw_contract("pipeline step '" + op + "': param '" + key +
                   "' must be >= " + std::to_string(min_value) + ", got " +
                   std::to_string(n));
  return n;
}

DirectionSelector step_selector(const json& params, const std::string& op) {
  if (!params.contains("selector")) return DirectionSelector::kTop;
  const json& v = params.at("selector");
  if (v.is_string() && v.get<std::string>() == "top")
    return DirectionSelector::kTop;
  if (v.is_string() && v.get<std::string>() == "least")
    return DirectionSelector::kLeast;
  throw_contract("pipeline step '" + op +
                 "': selector must be \"top\" or \"least\"");
}

void check_param_keys(const json& params, const std::string& op,
                      const std::set<std::string>& allowed) {
  for (const auto& [key, value] : params.items())
    if (!allowed.contains(key))
      throw_contract("pipeline step '" + op + "': unknown param '" + key +
                     "'");
}

}  // namespace

Pipeline Pipeline::parse(const json& config, std::uint64_t default_seed) {
  if (!config.is_array())
    throw_contract("pipeline config must be a JSON array of steps");

  Pipeline pipeline;
  for (std::size_t s = 0; s < config.size(); ++s) {
    const json& raw = config[s];
    if (!raw.is_object())
      throw_contract("pipeline step " + std::to_string(s) +
                     " is not a JSON object");
    for (const auto& [key, value] : raw.items())
      if (key != "op" && key != "params" && key != "seed")
        throw_contract("pipeline step " + std::to_string(s) +
                       ": unknown key '" + key + "'");
    if (!raw.contains("op") || !raw.at("op").is_string())
      throw_contract("pipeline step " + std::to_string(s) +
                     " needs a string 'op'");

    PipelineStep step;
    step.op = raw.at("op").get<std::string>();
    json params = raw.value("params", json::object());
    if (!params.is_object())
      throw_contract("pipeline step '" + step.op +
                     "': params must be an object");
    if (raw.contains("seed")) {
      const json& sv = raw.at("seed");
      if (!sv.is_number_unsigned() &&
          !(sv.is_number_integer() && sv.get<std::int64_t>() >= 0))
        throw_contract("pipeline step '" + step.op +
                       "': seed must be a non-negative integer");
      step.seed = sv.get<std::uint64_t>();
    } else {
      step.seed = default_seed;
    }

    // Normalize params with defaults filled in, so to_json() echoes the
    // exact configuration the run used.
    if (step.op == "zero_mean") {
      check_param_keys(params, step.op, {});
      step.params = json::object();
    } else if (step.op == "clustering_zm") {
      check_param_keys(params, step.op, {"k"});
      step.params = {
          {"k", step_int(params, "k", kDefaultClusterCount, 1, step.op)}};
    } else if (step.op == "global_abtt" || step.op == "remove_least") {
      check_param_keys(params, step.op, {"remove"});
      step.params = {{"remove", step_int(params, "remove",
                                         kDefaultRemovedDirections, 0,
                                         step.op)}};
    } else if (step.op == "cluster_based") {
      check_param_keys(params, step.op, {"k", "remove", "selector"});
      step.params = {
          {"k", step_int(params, "k", kDefaultClusterCount, 1, step.op)},
          {"remove", step_int(params, "remove", kDefaultRemovedDirections, 0,
                              step.op)},
          {"selector",
           step_selector(params, step.op) == DirectionSelector::kTop
               ? "top"
               : "least"}};
    } else {
      throw_contract("pipeline step " + std::to_string(s) + ": unknown op '" +
                     step.op + "'");
    }
    pipeline.steps_.push_back(std::move(step));
  }
  return pipeline;
}

Pipeline Pipeline::load(const std::filesystem::path& path,
                        std::uint64_t default_seed) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open " + path.string());
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    throw_contract("invalid pipeline JSON in " + path.string() + ": " +
                   e.what());
  }
  return parse(config, default_seed);
}

Matrix Pipeline::apply(const Matrix& m, Warnings* warnings) const {
  Matrix cur = m;
  for (const PipelineStep& step : steps_) {
    if (step.op == "zero_mean") {
      cur = zero_mean(cur);
    } else if (step.op == "clustering_zm") {
      cur = clustering_zm(cur, step.params.at("k").get<int>(), step.seed);
    } else if (step.op == "global_abtt") {
      cur = global_abtt(cur, step.params.at("remove").get<int>());
    } else if (step.op == "remove_least") {
      cur = remove_directions(
          cur, DirectionRemovalSpec{step.params.at("remove").get<int>(),
                                    DirectionSelector::kLeast});
    } else if (step.op == "cluster_based") {
      cur = cluster_based(
          cur, step.params.at("k").get<int>(),
          step.params.at("remove").get<int>(), step.seed,
          step.params.at("selector").get<std::string>() == "top"
              ? DirectionSelector::kTop
              : DirectionSelector::kLeast,
          warnings);
    } else {
      throw_contract("unknown pipeline op '" + step.op + "'");
    }
  }
  return cur;
}

nlohmann::json Pipeline::to_json() const {
  json out = json::array();
  for (const PipelineStep& step : steps_)
    out.push_back(
        {{"op", step.op}, {"params", step.params}, {"seed", step.seed}});
  return out;
}

}  // namespace isoprobe
