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

#include "isoprobe/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "isoprobe/geometry.hpp"
#include "isoprobe/text.hpp"

namespace isoprobe {

namespace {

// Poolable row indices per sentence, relative to `layer_rows` order (which is
// also the row order of the transformed layer matrix).
std::unordered_map<std::uint32_t, std::vector<Index>> poolable_by_sentence(
    const EmbeddingDump& dump, const std::vector<Index>& layer_rows) {
  std::unordered_map<std::uint32_t, std::vector<Index>> by_sentence;
  for (std::size_t i = 0; i < layer_rows.size(); ++i) {
    const TokenRecord& r =
        dump.records[static_cast<std::size_t>(layer_rows[i])];
    if (r.is_poolable)
      by_sentence[r.sentence_id].push_back(static_cast<Index>(i));
  }
  return by_sentence;
}

std::vector<Index> rows_of_layer(const EmbeddingDump& dump,
                                 std::uint32_t layer) {
  std::vector<Index> rows;
  for (Index i = 0; i < dump.size(); ++i)
    if (dump.records[static_cast<std::size_t>(i)].layer == layer)
      rows.push_back(i);
  if (rows.empty())
    throw_contract("dump has no rows at layer " + std::to_string(layer));
  return rows;
}

// Pools the transformed layer matrix per sentence and scores every pair by
// cosine, clamped into [-1, 1].
std::vector<std::pair<double, double>> score_transformed(
    const EmbeddingDump& dump, const std::vector<Index>& layer_rows,
    const Matrix& transformed, const StsDataset& dataset, std::uint32_t layer,
    Warnings* warnings) {
  auto by_sentence = poolable_by_sentence(dump, layer_rows);

  std::unordered_map<std::uint32_t, Vector> pooled;
  auto pool = [&](std::uint32_t sentence_id) -> const Vector& {
    auto it = pooled.find(sentence_id);
    if (it != pooled.end()) return it->second;
    auto rows_it = by_sentence.find(sentence_id);
    if (rows_it == by_sentence.end())
      throw_contract("no poolable rows for sentence " +
                     std::to_string(sentence_id) + " at layer " +
                     std::to_string(layer));
    return pooled
        .emplace(sentence_id, mean_of_rows(transformed, rows_it->second))
        .first->second;
  };

  std::vector<std::pair<double, double>> out;
  std::int64_t skipped = 0;
  for (const StsPair& pair : dataset.pairs) {
    const Vector& a = pool(pair.sent_a);
    const Vector& b = pool(pair.sent_b);
    double na = a.norm();
    double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
      ++skipped;
      continue;
    }
    double cosine = a.dot(b) / (na * nb);
    out.push_back({std::clamp(cosine, -1.0, 1.0), pair.gold});
  }
  if (skipped > 0)
    add_warning(warnings, "skipped " + std::to_string(skipped) +
                              " pairs with a zero-norm pooled vector");
  return out;
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] != values[b] ? values[a] < values[b] : a < b;
  });
  std::vector<double> ranks(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    // Tied values share the mean of the positions they occupy (1-based).
    double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t p = start; p < end; ++p) ranks[order[p]] = rank;
    start = end;
  }
  return ranks;
}

}  // namespace

nlohmann::json EvalResult::to_json() const {
  return nlohmann::json{{"spearman_rho", spearman_rho},
                        {"n_pairs", n_pairs},
                        {"isotropy_before", isotropy_before},
                        {"isotropy_after", isotropy_after},
                        {"pipeline", pipeline}};
}

SentenceRepresentation mean_pool(const EmbeddingDump& dump,
                                 std::uint32_t sentence_id,
                                 std::uint32_t layer) {
  std::vector<Index> rows;
  for (Index i = 0; i < dump.size(); ++i) {
    const TokenRecord& r = dump.records[static_cast<std::size_t>(i)];
    if (r.sentence_id == sentence_id && r.layer == layer && r.is_poolable)
      rows.push_back(i);
  }
  if (rows.empty())
    throw_contract("no poolable rows for sentence " +
                   std::to_string(sentence_id) + " at layer " +
                   std::to_string(layer));
  SentenceRepresentation rep;
  rep.sentence_id = sentence_id;
  rep.vector = mean_of_rows(dump.vectors, rows);
  rep.n_pooled = static_cast<int>(rows.size());
  return rep;
}

std::vector<std::pair<double, double>> score_pairs(const EmbeddingDump& dump,
                                                   const StsDataset& dataset,
                                                   std::uint32_t layer,
                                                   const Pipeline& pipeline,
                                                   Warnings* warnings) {
  std::vector<Index> layer_rows = rows_of_layer(dump, layer);
  Matrix transformed =
      pipeline.apply(gather_rows(dump.vectors, layer_rows), warnings);
  return score_transformed(dump, layer_rows, transformed, dataset, layer,
                           warnings);
}

double spearman(const std::vector<double>& pred,
                const std::vector<double>& gold) {
  if (pred.size() != gold.size())
    throw_contract("spearman inputs differ in length: " +
                   std::to_string(pred.size()) + " vs " +
                   std::to_string(gold.size()));
  if (pred.empty()) throw_contract("spearman of empty inputs");

  std::vector<double> rx = average_ranks(pred);
  std::vector<double> ry = average_ranks(gold);
  const double n = static_cast<double>(rx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    double dx = rx[i] - mx;
    double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw_numeric("spearman undefined: an input has zero rank variance "
                  "(all values tied)");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<LayerReportRow> layer_report(
    const std::vector<EmbeddingDump>& dumps, Warnings* warnings) {
  if (dumps.empty()) throw_contract("layer report needs at least one dump");
  const int dim = dumps.front().dim;
  for (const EmbeddingDump& d : dumps)
    if (d.dim != dim)
      throw_contract("dumps disagree on dimension: " + std::to_string(dim) +
                     " vs " + std::to_string(d.dim));

  // (layer, scope) -> rows gathered across dumps in dump order. A map keeps
  // layers ascending.
  std::map<std::uint32_t, std::array<std::vector<Vector>, 2>> groups;
  for (const EmbeddingDump& d : dumps) {
    for (Index i = 0; i < d.size(); ++i) {
      const TokenRecord& r = d.records[static_cast<std::size_t>(i)];
      Vector row = d.vectors.row(i).transpose();
      groups[r.layer][0].push_back(row);
      if (r.is_cls) groups[r.layer][1].push_back(std::move(row));
    }
  }

  const char* scope_names[2] = {"all", "cls"};
  std::vector<LayerReportRow> out;
  for (const auto& [layer, scopes] : groups) {
    for (int s = 0; s < 2; ++s) {
      const std::vector<Vector>& rows = scopes[static_cast<std::size_t>(s)];
      if (rows.size() < 2) {
        add_warning(warnings,
                    "layer " + std::to_string(layer) + " scope " +
                        scope_names[s] + " has " +
                        std::to_string(rows.size()) +
                        " rows; need 2, skipped");
        continue;
      }
      Matrix m(static_cast<Index>(rows.size()), dim);
      for (std::size_t i = 0; i < rows.size(); ++i)
        m.row(static_cast<Index>(i)) = rows[i].transpose();
      IsotropyReport report = isotropy_score(m);
      LayerReportRow row;
      row.layer = layer;
      row.scope = scope_names[s];
      row.isotropy = report.isotropy;
      row.neg_ln_isotropy = -(report.log_f_min - report.log_f_max);
      row.neg_log10_isotropy = row.neg_ln_isotropy / std::numbers::ln10;
      out.push_back(std::move(row));
    }
  }
  if (out.empty())
    throw_contract("layer report: no (layer, scope) group has 2 rows");
  return out;
}

std::string layer_report_csv(const std::vector<LayerReportRow>& rows) {
  std::string out = "layer,scope,isotropy,neg_ln_isotropy,neg_log10_isotropy\n";
  for (const LayerReportRow& r : rows) {
    out += std::to_string(r.layer);
    out += ',';
    out += r.scope;
    out += ',';
    out += format_double(r.isotropy);
    out += ',';
    out += format_double(r.neg_ln_isotropy);
    out += ',';
    out += format_double(r.neg_log10_isotropy);
    out += '\n';
  }
  return out;
}

EvalResult run_sts_eval(const EmbeddingDump& dump, const StsDataset& dataset,
                        std::uint32_t layer, const Pipeline& pipeline,
                        Warnings* warnings) {
  std::vector<Index> layer_rows = rows_of_layer(dump, layer);
  Matrix raw = gather_rows(dump.vectors, layer_rows);
  IsotropyReport before = isotropy_score(raw);
  Matrix transformed = pipeline.apply(raw, warnings);
  IsotropyReport after = isotropy_score(transformed);

  auto scored = score_transformed(dump, layer_rows, transformed, dataset,
                                  layer, warnings);
  std::vector<double> pred, gold;
  pred.reserve(scored.size());
  gold.reserve(scored.size());
  for (const auto& [p, g] : scored) {
    pred.push_back(p);
    gold.push_back(g);
  }

  EvalResult result;
  result.spearman_rho = spearman(pred, gold);
  result.n_pairs = static_cast<std::int64_t>(scored.size());
  result.isotropy_before = before.isotropy;
  result.isotropy_after = after.isotropy;
  result.pipeline = pipeline.to_json();
  return result;
}

}  // namespace isoprobe
