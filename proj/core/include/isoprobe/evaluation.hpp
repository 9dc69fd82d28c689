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

#ifndef ISOPROBE_EVALUATION_HPP
#define ISOPROBE_EVALUATION_HPP

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "isoprobe/embedding_store.hpp"
#include "isoprobe/error.hpp"
#include "isoprobe/matrix.hpp"
#include "isoprobe/pipeline.hpp"

namespace isoprobe {

struct SentenceRepresentation {
  std::uint32_t sentence_id = 0;
  Vector vector;
  int n_pooled = 0;
};

// Outcome of one STS run: Spearman correlation of cosine predictions against
// gold, plus the isotropy of the layer's token matrix before and after the
// pipeline.
struct EvalResult {
  double spearman_rho = 0.0;
  std::int64_t n_pairs = 0;
  double isotropy_before = 0.0;
  double isotropy_after = 0.0;
  nlohmann::json pipeline;

  nlohmann::json to_json() const;
};

struct LayerReportRow {
  std::uint32_t layer = 0;
  std::string scope;  // "all" or "cls"
  double isotropy = 0.0;
  double neg_ln_isotropy = 0.0;
  double neg_log10_isotropy = 0.0;
};

// Arithmetic mean of the poolable rows for (sentence_id, layer). A [CLS] row
// participates only if it is flagged poolable.
SentenceRepresentation mean_pool(const EmbeddingDump& dump,
                                 std::uint32_t sentence_id,
                                 std::uint32_t layer);

// Applies the pipeline to the full token matrix of the layer, pools the
// transformed vectors per sentence, and scores each pair by cosine. Returns
// (predicted, gold) in dataset order; pairs with a zero-norm pooled vector
// are skipped with a warning. Missing sentence ids are contract errors.
std::vector<std::pair<double, double>> score_pairs(const EmbeddingDump& dump,
                                                   const StsDataset& dataset,
                                                   std::uint32_t layer,
                                                   const Pipeline& pipeline,
                                                   Warnings* warnings = nullptr);

// Spearman rho with average-rank tie handling: the Pearson correlation of
// the rank vectors. Constant input (zero rank variance) is an error rather
// than NaN.
double spearman(const std::vector<double>& pred,
                const std::vector<double>& gold);

// One row per (layer, scope in {all, cls}) across all dumps, with the
// isotropy value and its negative natural and base-10 logs. A scope with
// fewer than 2 rows in a layer is skipped with a warning.
std::vector<LayerReportRow> layer_report(
    const std::vector<EmbeddingDump>& dumps, Warnings* warnings = nullptr);

// CSV columns: layer,scope,isotropy,neg_ln_isotropy,neg_log10_isotropy
std::string layer_report_csv(const std::vector<LayerReportRow>& rows);

// Full protocol: transform once, pool, score, correlate, and measure
// isotropy before/after.
EvalResult run_sts_eval(const EmbeddingDump& dump, const StsDataset& dataset,
                        std::uint32_t layer, const Pipeline& pipeline,
                        Warnings* warnings = nullptr);

}  // namespace isoprobe

#endif  // ISOPROBE_EVALUATION_HPP
