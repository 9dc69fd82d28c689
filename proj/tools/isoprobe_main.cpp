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

#include <CLI11.hpp>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "isoprobe/embedding_store.hpp"
#include "isoprobe/evaluation.hpp"
#include "isoprobe/geometry.hpp"
#include "isoprobe/parallel.hpp"
#include "isoprobe/pipeline.hpp"
#include "isoprobe/text.hpp"
#include "isoprobe/transforms.hpp"

namespace {

using namespace isoprobe;
namespace fs = std::filesystem;

struct Options {
  std::string input;
  std::string output;
  std::string sts;
  std::string pipeline;
  std::uint64_t seed = 42;
  std::uint32_t layer = 0;
  bool layer_set = false;
  std::string scope = "all";
  int k = kDefaultClusterCount;
  int remove = kDefaultRemovedDirections;
  std::string selector = "top";
  int buckets = 5;
  int threads = 0;
};

void flush_warnings(const Warnings& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

// Primary results go to --output when given, stdout otherwise; logs and
// warnings always go to stderr.
void emit(const std::string& text, const std::string& output_path) {
  if (output_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(output_path, std::ios::binary);
  if (!out) throw_io("cannot open " + output_path + " for writing");
  out << text;
  if (!out) throw_io("write failed: " + output_path);
}

SelectFilter filter_from(const Options& opt) {
  SelectFilter f;
  if (opt.layer_set) f.layer = opt.layer;
  if (opt.scope == "cls") f.cls_only = true;
  return f;
}

std::uint32_t resolve_layer(const EmbeddingDump& dump, const Options& opt) {
  if (opt.layer_set) return opt.layer;
  std::set<std::uint32_t> layers;
  for (const TokenRecord& r : dump.records) layers.insert(r.layer);
  if (layers.size() != 1)
    throw_contract("dump has " + std::to_string(layers.size()) +
                   " layers; pass --layer to pick one");
  return *layers.begin();
}

Pipeline load_pipeline(const Options& opt) {
  if (opt.pipeline.empty()) return Pipeline{};
  return Pipeline::load(opt.pipeline, opt.seed);
}

int run_measure(const Options& opt) {
  EmbeddingDump dump = load_dump(opt.input);
  Matrix m = select(dump, filter_from(opt));
  IsotropyReport report = isotropy_score(m);
  emit(report.to_json().dump(2) + "\n", opt.output);
  return 0;
}

int run_transform(const Options& opt) {
  EmbeddingDump dump = load_dump(opt.input);
  Pipeline pipeline = Pipeline::load(opt.pipeline, opt.seed);
  Warnings warnings;

  EmbeddingDump out;
  out.dim = dump.dim;
  if (opt.layer_set) {
    std::vector<Index> rows = select_indices(dump, filter_from(opt));
    out.vectors = pipeline.apply(gather_rows(dump.vectors, rows), &warnings);
    for (Index i : rows)
      out.records.push_back(dump.records[static_cast<std::size_t>(i)]);
  } else {
    // Each layer is its own embedding space; transform them independently
    // and keep every row in place.
    std::map<std::uint32_t, std::vector<Index>> by_layer;
    for (Index i = 0; i < dump.size(); ++i)
      by_layer[dump.records[static_cast<std::size_t>(i)].layer].push_back(i);
    out.records = dump.records;
    out.vectors.resize(dump.vectors.rows(), dump.vectors.cols());
    for (const auto& [layer, rows] : by_layer) {
      Matrix transformed =
          pipeline.apply(gather_rows(dump.vectors, rows), &warnings);
      for (std::size_t i = 0; i < rows.size(); ++i)
        out.vectors.row(rows[i]) = transformed.row(static_cast<Index>(i));
    }
  }
  write_binary_dump(out, opt.output);
  flush_warnings(warnings);
  return 0;
}

int run_cluster(const Options& opt) {
  EmbeddingDump dump = load_dump(opt.input);
  Matrix m = select(dump, filter_from(opt));
  ClusterAssignment ca = kmeans(m, opt.k, opt.seed);

  std::vector<std::int64_t> sizes(static_cast<std::size_t>(ca.k), 0);
  for (int label : ca.labels) ++sizes[static_cast<std::size_t>(label)];
  nlohmann::json summary{{"k", ca.k},
                         {"iterations", ca.iterations},
                         {"inertia", ca.inertia},
                         {"cluster_sizes", sizes}};
  if (!opt.output.empty()) {
    std::string csv = "row,label\n";
    for (std::size_t i = 0; i < ca.labels.size(); ++i)
      csv += std::to_string(i) + "," + std::to_string(ca.labels[i]) + "\n";
    emit(csv, opt.output);
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int run_eval(const Options& opt) {
  EmbeddingDump dump = load_dump(opt.input);
  StsDataset dataset = load_sts_dataset(opt.sts);
  std::uint32_t layer = resolve_layer(dump, opt);
  Pipeline pipeline = load_pipeline(opt);
  Warnings warnings;
  EvalResult result = run_sts_eval(dump, dataset, layer, pipeline, &warnings);
  flush_warnings(warnings);
  emit(result.to_json().dump(2) + "\n", opt.output);
  return 0;
}

int run_layers(const Options& opt) {
  std::vector<EmbeddingDump> dumps;
  if (fs::is_directory(opt.input)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(opt.input))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) dumps.push_back(load_dump(f));
    if (dumps.empty())
      throw_contract("directory holds no dump files: " + opt.input);
  } else {
    dumps.push_back(load_dump(opt.input));
  }
  Warnings warnings;
  std::vector<LayerReportRow> rows = layer_report(dumps, &warnings);
  flush_warnings(warnings);
  emit(layer_report_csv(rows), opt.output);
  return 0;
}

int run_project(const Options& opt) {
  EmbeddingDump dump = load_dump(opt.input);
  Warnings warnings;
  // Buckets are quantiles over the whole dump's known frequencies; the layer
  // filter below only chooses which rows get printed.
  std::vector<int> buckets =
      frequency_buckets(dump, opt.buckets, /*unknown_to_bucket0=*/true,
                        &warnings);
  std::vector<Index> rows = select_indices(dump, filter_from(opt));
  Matrix coords = project_2d(gather_rows(dump.vectors, rows));

  std::string csv = "token,bucket,x,y\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t rec = static_cast<std::size_t>(rows[i]);
    csv += csv_quote(dump.records[rec].token);
    csv += ',';
    csv += std::to_string(buckets[rec]);
    csv += ',';
    csv += format_double(coords(static_cast<Index>(i), 0));
    csv += ',';
    csv += format_double(coords(static_cast<Index>(i), 1));
    csv += '\n';
  }
  flush_warnings(warnings);
  emit(csv, opt.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"Embedding-space isotropy toolkit: measure the directional "
               "uniformity of vector dumps, post-process them, and run "
               "sentence-similarity evaluations."};
  app.require_subcommand(1);

  app.add_option("--threads", opt.threads,
                 "Worker threads (default: all hardware threads)")
      ->check(CLI::PositiveNumber);

  std::vector<CLI::Option*> layer_opts;
  auto add_common = [&](CLI::App* sub, bool with_layer, bool with_scope) {
    sub->fallthrough();
    sub->add_option("--input", opt.input, "Input dump path")->required();
    if (with_layer)
      layer_opts.push_back(
          sub->add_option("--layer", opt.layer, "Restrict to one layer"));
    if (with_scope)
      sub->add_option("--scope", opt.scope, "Row scope: all or cls")
          ->check(CLI::IsMember({"all", "cls"}));
  };

  CLI::App* measure = app.add_subcommand(
      "measure", "Print the isotropy report of a dump as JSON");
  add_common(measure, true, true);
  measure->add_option("--output", opt.output, "Write JSON here instead of stdout");

  CLI::App* transform = app.add_subcommand(
      "transform", "Apply a transform pipeline and write a binary dump");
  add_common(transform, true, false);
  transform->add_option("--output", opt.output, "Output dump path")->required();
  transform->add_option("--pipeline", opt.pipeline, "Pipeline JSON path")
      ->required();
  transform->add_option("--seed", opt.seed,
                        "Default seed for steps without one");

  CLI::App* cluster = app.add_subcommand(
      "cluster", "k-means over a dump; JSON summary on stdout");
  add_common(cluster, true, true);
  cluster->add_option("--k", opt.k, "Cluster count")
      ->check(CLI::PositiveNumber);
  cluster->add_option("--seed", opt.seed, "Clustering seed");
  cluster->add_option("--output", opt.output, "Also write row,label CSV here");

  CLI::App* eval = app.add_subcommand(
      "eval", "Sentence-similarity evaluation of a dump against gold scores");
  add_common(eval, true, false);
  eval->add_option("--sts", opt.sts, "Sentence-pair CSV path")->required();
  eval->add_option("--pipeline", opt.pipeline,
                   "Pipeline JSON path (default: no transform)");
  eval->add_option("--seed", opt.seed, "Default seed for steps without one");
  eval->add_option("--output", opt.output, "Write JSON here instead of stdout");

  CLI::App* layers = app.add_subcommand(
      "layers", "Per-layer isotropy CSV for a dump file or a directory");
  add_common(layers, false, false);
  layers->add_option("--output", opt.output, "Write CSV here instead of stdout");

  CLI::App* project = app.add_subcommand(
      "project", "2-D projection CSV with frequency buckets");
  add_common(project, true, false);
  project->add_option("--buckets", opt.buckets, "Frequency bucket count")
      ->check(CLI::Range(2, 1000000));
  project->add_option("--output", opt.output, "Write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (const CLI::Option* o : layer_opts)
    if (o->count() > 0) opt.layer_set = true;

  try {
    if (opt.threads > 0) set_num_threads(opt.threads);
    if (*measure) return run_measure(opt);
    if (*transform) return run_transform(opt);
    if (*cluster) return run_cluster(opt);
    if (*eval) return run_eval(opt);
    if (*layers) return run_layers(opt);
    if (*project) return run_project(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
