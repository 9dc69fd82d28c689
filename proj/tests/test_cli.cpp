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

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "isoprobe/embedding_store.hpp"
#include "isoprobe/matrix.hpp"
#include "isoprobe/transforms.hpp"
#include "support/fixtures.hpp"
#include "support/subprocess.hpp"

using namespace isoprobe;
using testsupport::run_cli;

namespace {

struct Scratch {
  std::filesystem::path dir;
  explicit Scratch(const std::string& tag)
      : dir(testsupport::make_scratch_dir(tag)) {}
  ~Scratch() { std::filesystem::remove_all(dir); }
  std::string path(const std::string& name) const {
    return (dir / name).string();
  }
};

Matrix cross_matrix() {
  Matrix m(4, 2);
  m << 2, 0, -2, 0, 0, 1, 0, -1;
  return m;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t eol = text.find('\n', start);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(start, eol - start);
    if (!line.empty()) {
      std::vector<std::string> fields;
      std::size_t f = 0;
      while (true) {
        std::size_t c = line.find(',', f);
        if (c == std::string::npos) {
          fields.push_back(line.substr(f));
          break;
        }
        fields.push_back(line.substr(f, c - f));
        f = c + 1;
      }
      rows.push_back(std::move(fields));
    }
    start = eol + 1;
  }
  return rows;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits zero and names the subcommands") {
  auto r = run_cli({"--help"});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("measure") != std::string::npos);
  CHECK(r.out.find("transform") != std::string::npos);
  CHECK(r.out.find("eval") != std::string::npos);
}

TEST_CASE("bad invocations exit with the contract code") {
  CHECK(run_cli({}).exit_code == 2);                       // no subcommand
  CHECK(run_cli({"measure"}).exit_code == 2);              // --input missing
  CHECK(run_cli({"measure", "--input", "x", "--bogus"}).exit_code == 2);
  CHECK(run_cli({"frobnicate", "--input", "x"}).exit_code == 2);
}

TEST_CASE("missing input file exits with the I/O code") {
  auto r = run_cli({"measure", "--input", "/nonexistent/dump.tsv"});
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("malformed dump content exits with the contract code") {
  Scratch s("cli_bad");
  testsupport::write_file(s.path("bad.tsv"), "#isoprobe-dump v2 dim=2\n");
  auto r = run_cli({"measure", "--input", s.path("bad.tsv")});
  CHECK(r.exit_code == 2);

  testsupport::write_file(s.path("short.tsv"),
                          "#isoprobe-dump v1 dim=3\n"
                          "tok\t0\t0\t1\t0\t1\t5\t1.0\t2.0\n");
  CHECK(run_cli({"measure", "--input", s.path("short.tsv")}).exit_code == 2);
}

TEST_CASE("measure reports the known cross value") {
  Scratch s("cli_measure");
  write_text_dump(fixtures::matrix_dump(cross_matrix()), s.path("cross.tsv"));
  auto r = run_cli({"measure", "--input", s.path("cross.tsv")});
  REQUIRE(r.exit_code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(std::abs(j["isotropy"].get<double>() - 0.53401) < 1e-4);
  CHECK(j["n_vectors"] == 4);
  CHECK(j["dim"] == 2);
  CHECK(j["argmax_index"] == 0);
  CHECK(j["argmin_index"] == 1);
  CHECK(j.contains("log_f_min"));
  CHECK(j.contains("log_f_max"));
  CHECK(j.contains("rank_deficient"));

  // --output writes the same bytes to a file.
  auto r2 = run_cli({"measure", "--input", s.path("cross.tsv"), "--output",
                     s.path("report.json")});
  REQUIRE(r2.exit_code == 0);
  CHECK(testsupport::read_file(s.path("report.json")) == r.out);
}

TEST_CASE("measure filters rows before scoring") {
  Scratch s("cli_filter");
  write_text_dump(fixtures::matrix_dump(cross_matrix()), s.path("plain.tsv"));

  auto none = run_cli({"measure", "--input", s.path("plain.tsv"), "--scope",
                       "cls"});
  CHECK(none.exit_code == 2);
  CHECK(none.err.find("cls") != std::string::npos);

  auto bad_layer =
      run_cli({"measure", "--input", s.path("plain.tsv"), "--layer", "3"});
  CHECK(bad_layer.exit_code == 2);

  auto bad_scope = run_cli(
      {"measure", "--input", s.path("plain.tsv"), "--scope", "everything"});
  CHECK(bad_scope.exit_code == 2);
}

TEST_CASE("measure output is byte-stable across runs and thread counts") {
  Scratch s("cli_stable");
  write_text_dump(fixtures::matrix_dump(fixtures::gaussian_matrix(400, 16, 9)),
                  s.path("g.tsv"));
  auto a = run_cli({"measure", "--input", s.path("g.tsv")});
  auto b = run_cli({"measure", "--input", s.path("g.tsv")});
  auto t1 =
      run_cli({"--threads", "1", "measure", "--input", s.path("g.tsv")});
  auto t4 =
      run_cli({"--threads", "4", "measure", "--input", s.path("g.tsv")});
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == t1.out);
  CHECK(t1.out == t4.out);
}

TEST_CASE("transform applies a pipeline file and writes a binary dump") {
  Scratch s("cli_transform");
  Matrix m = fixtures::gaussian_matrix(60, 8, 3, 2.0);
  write_text_dump(fixtures::matrix_dump(m), s.path("in.tsv"));
  testsupport::write_file(s.path("zm.json"), R"([{"op": "zero_mean"}])");

  auto r = run_cli({"transform", "--input", s.path("in.tsv"), "--pipeline",
                    s.path("zm.json"), "--output", s.path("out.bin")});
  REQUIRE(r.exit_code == 0);
  EmbeddingDump out = load_dump(s.path("out.bin"));
  REQUIRE(out.size() == 60);
  CHECK(mean_of_rows(out.vectors).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(out.records[5].token == "t5");

  // Identical bytes for identical runs, including across thread counts.
  auto r1 = run_cli({"--threads", "1", "transform", "--input", s.path("in.tsv"),
                     "--pipeline", s.path("zm.json"), "--output",
                     s.path("t1.bin")});
  auto r4 = run_cli({"--threads", "4", "transform", "--input", s.path("in.tsv"),
                     "--pipeline", s.path("zm.json"), "--output",
                     s.path("t4.bin")});
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r4.exit_code == 0);
  CHECK(testsupport::read_file(s.path("t1.bin")) ==
        testsupport::read_file(s.path("t4.bin")));
  CHECK(testsupport::read_file(s.path("t1.bin")) ==
        testsupport::read_file(s.path("out.bin")));
}

TEST_CASE("transform treats each layer as its own space") {
  Scratch s("cli_layers_transform");
  // Two layers with different means; zero_mean must center each separately.
  Matrix m0 = fixtures::gaussian_matrix(20, 4, 1);
  m0.array() += 10.0;
  Matrix m1 = fixtures::gaussian_matrix(20, 4, 2);
  m1.array() -= 10.0;
  EmbeddingDump d0 = fixtures::matrix_dump(m0, 0);
  EmbeddingDump d1 = fixtures::matrix_dump(m1, 1);
  EmbeddingDump both;
  both.dim = 4;
  both.records = d0.records;
  for (TokenRecord rec : d1.records) {
    rec.sentence_id += 100;  // keep (sentence, layer, position) unique
    both.records.push_back(rec);
  }
  both.vectors.resize(40, 4);
  both.vectors.topRows(20) = d0.vectors;
  both.vectors.bottomRows(20) = d1.vectors;
  write_binary_dump(both, s.path("both.bin"));
  testsupport::write_file(s.path("zm.json"), R"([{"op": "zero_mean"}])");

  auto r = run_cli({"transform", "--input", s.path("both.bin"), "--pipeline",
                    s.path("zm.json"), "--output", s.path("out.bin")});
  REQUIRE(r.exit_code == 0);
  EmbeddingDump out = load_dump(s.path("out.bin"));
  REQUIRE(out.size() == 40);
  CHECK(mean_of_rows(Matrix(out.vectors.topRows(20))).cwiseAbs().maxCoeff() <=
        1e-10);
  CHECK(mean_of_rows(Matrix(out.vectors.bottomRows(20)))
            .cwiseAbs()
            .maxCoeff() <= 1e-10);

  // Restricting to one layer keeps only that layer's rows.
  auto only = run_cli({"transform", "--input", s.path("both.bin"), "--pipeline",
                       s.path("zm.json"), "--output", s.path("l1.bin"),
                       "--layer", "1"});
  REQUIRE(only.exit_code == 0);
  EmbeddingDump l1 = load_dump(s.path("l1.bin"));
  CHECK(l1.size() == 20);
  CHECK(l1.records[0].layer == 1);
}

TEST_CASE("transform rejects an oversized cluster count") {
  Scratch s("cli_k");
  write_text_dump(fixtures::matrix_dump(fixtures::gaussian_matrix(10, 4, 8)),
                  s.path("small.tsv"));
  testsupport::write_file(
      s.path("cb.json"),
      R"([{"op": "cluster_based", "params": {"remove": 2}}])");  // k stays 27
  auto r = run_cli({"transform", "--input", s.path("small.tsv"), "--pipeline",
                    s.path("cb.json"), "--output", s.path("out.bin")});
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("27") != std::string::npos);
}

TEST_CASE("cluster prints a summary and optional labels") {
  Scratch s("cli_cluster");
  Matrix m(4, 2);
  m << 0, 0, 0, 1, 10, 10, 10, 11;
  write_text_dump(fixtures::matrix_dump(m), s.path("pairs.tsv"));
  auto r = run_cli({"cluster", "--input", s.path("pairs.tsv"), "--k", "2",
                    "--output", s.path("labels.csv")});
  REQUIRE(r.exit_code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["k"] == 2);
  CHECK(std::abs(j["inertia"].get<double>() - 1.0) < 1e-12);
  std::vector<std::int64_t> sizes =
      j["cluster_sizes"].get<std::vector<std::int64_t>>();
  REQUIRE(sizes.size() == 2);
  CHECK(sizes[0] == 2);
  CHECK(sizes[1] == 2);
  CHECK(j["iterations"].get<int>() >= 1);

  auto rows = parse_csv(testsupport::read_file(s.path("labels.csv")));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"row", "label"});
  CHECK(rows[1][1] == rows[2][1]);
  CHECK(rows[3][1] == rows[4][1]);
  CHECK(rows[1][1] != rows[3][1]);

  CHECK(run_cli({"cluster", "--input", s.path("pairs.tsv"), "--k", "9"})
            .exit_code == 2);
  CHECK(run_cli({"cluster", "--input", s.path("pairs.tsv"), "--k", "0"})
            .exit_code == 2);
}

TEST_CASE("eval runs the full protocol deterministically") {
  Scratch s("cli_eval");
  fixtures::StsFixture fx = fixtures::sts_fixture_signal_orthogonal(40);
  write_binary_dump(fx.dump, s.path("sts.bin"));
  std::string csv = "sent_a,sent_b,gold\n";
  for (const StsPair& p : fx.dataset.pairs)
    csv += std::to_string(p.sent_a) + "," + std::to_string(p.sent_b) + "," +
           std::to_string(p.gold) + "\n";
  testsupport::write_file(s.path("gold.csv"), csv);
  testsupport::write_file(s.path("abtt.json"),
                          R"([{"op": "global_abtt", "params": {"remove": 4}}])");

  auto a = run_cli({"eval", "--input", s.path("sts.bin"), "--sts",
                    s.path("gold.csv"), "--pipeline", s.path("abtt.json")});
  auto b = run_cli({"eval", "--input", s.path("sts.bin"), "--sts",
                    s.path("gold.csv"), "--pipeline", s.path("abtt.json")});
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);

  auto j = nlohmann::json::parse(a.out);
  CHECK(j["n_pairs"].get<std::int64_t>() ==
        static_cast<std::int64_t>(fx.dataset.pairs.size()));
  double rho = j["spearman_rho"].get<double>();
  CHECK(rho >= -1.0);
  CHECK(rho <= 1.0);
  CHECK(j["isotropy_before"].get<double>() > 0.0);
  CHECK(j["isotropy_after"].get<double>() > 0.0);
  CHECK(j["pipeline"][0]["op"] == "global_abtt");

  // Baseline run without a pipeline: echo is an empty list.
  auto base = run_cli({"eval", "--input", s.path("sts.bin"), "--sts",
                       s.path("gold.csv")});
  REQUIRE(base.exit_code == 0);
  auto jb = nlohmann::json::parse(base.out);
  CHECK(jb["pipeline"].is_array());
  CHECK(jb["pipeline"].empty());
}

TEST_CASE("eval needs an explicit layer on multi-layer dumps") {
  Scratch s("cli_eval_layer");
  EmbeddingDump dump = fixtures::layered_dump(2, 8);
  write_binary_dump(dump, s.path("two.bin"));
  testsupport::write_file(s.path("gold.csv"),
                          "sent_a,sent_b,gold\n0,1,2.0\n1,2,3.0\n");
  auto r = run_cli(
      {"eval", "--input", s.path("two.bin"), "--sts", s.path("gold.csv")});
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("--layer") != std::string::npos);
  auto ok = run_cli({"eval", "--input", s.path("two.bin"), "--sts",
                     s.path("gold.csv"), "--layer", "0"});
  CHECK(ok.exit_code == 0);
}

TEST_CASE("layers emits one CSV row per layer and scope") {
  Scratch s("cli_layers");
  write_binary_dump(fixtures::layered_dump(2, 77), s.path("deep.bin"));
  auto r = run_cli({"layers", "--input", s.path("deep.bin")});
  REQUIRE(r.exit_code == 0);
  auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"layer", "scope", "isotropy",
                                            "neg_ln_isotropy",
                                            "neg_log10_isotropy"});
  CHECK(rows[1][0] == "0");
  CHECK(rows[1][1] == "all");
  CHECK(rows[2][1] == "cls");
  CHECK(rows[3][0] == "1");
  const double l0 = std::stod(rows[1][3]);
  const double l1 = std::stod(rows[3][3]);
  CHECK(l1 > l0);  // deeper layer is more anisotropic by construction
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double neg_ln = std::stod(rows[i][3]);
    const double neg_log10 = std::stod(rows[i][4]);
    CHECK(std::abs(neg_log10 - neg_ln / std::log(10.0)) <= 1e-9);
  }
}

TEST_CASE("layers accepts a directory of dumps") {
  Scratch s("cli_layers_dir");
  auto dir = s.dir / "dumps";
  std::filesystem::create_directories(dir);
  write_binary_dump(
      fixtures::matrix_dump(fixtures::gaussian_matrix(20, 4, 1), 0),
      dir / "a.bin");
  write_binary_dump(
      fixtures::matrix_dump(fixtures::gaussian_matrix(20, 4, 2), 1),
      dir / "b.bin");
  auto r = run_cli({"layers", "--input", dir.string()});
  REQUIRE(r.exit_code == 0);
  auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 3);  // header + layer 0 all + layer 1 all
  CHECK(rows[1][0] == "0");
  CHECK(rows[2][0] == "1");
  CHECK(r.err.find("warning:") != std::string::npos);  // cls scopes skipped

  auto empty_dir = s.dir / "empty";
  std::filesystem::create_directories(empty_dir);
  CHECK(run_cli({"layers", "--input", empty_dir.string()}).exit_code == 2);
}

TEST_CASE("project writes token, bucket, and plane coordinates") {
  Scratch s("cli_project");
  write_text_dump(fixtures::matrix_dump(cross_matrix()), s.path("cross.tsv"));
  auto r = run_cli({"project", "--input", s.path("cross.tsv"), "--buckets",
                    "2"});
  REQUIRE(r.exit_code == 0);
  auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"token", "bucket", "x", "y"});
  // Frequencies 1..4 split into two quantile buckets.
  CHECK(rows[1][1] == "1");
  CHECK(rows[2][1] == "1");
  CHECK(rows[3][1] == "2");
  CHECK(rows[4][1] == "2");
  // The plane of a 2-D dump is the dump itself, up to per-axis sign.
  double sx = std::stod(rows[1][2]) > 0 ? 1.0 : -1.0;
  double sy = std::stod(rows[3][3]) > 0 ? 1.0 : -1.0;
  CHECK(sx * std::stod(rows[1][2]) == doctest::Approx(2.0));
  CHECK(sx * std::stod(rows[2][2]) == doctest::Approx(-2.0));
  CHECK(sy * std::stod(rows[3][3]) == doctest::Approx(1.0));
  CHECK(sy * std::stod(rows[4][3]) == doctest::Approx(-1.0));
  CHECK(std::abs(std::stod(rows[1][3])) < 1e-9);
  CHECK(std::abs(std::stod(rows[3][2])) < 1e-9);

  CHECK(run_cli({"project", "--input", s.path("cross.tsv"), "--buckets", "1"})
            .exit_code == 2);
}

}  // TEST_SUITE
