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

#include "support/fixtures.hpp"

#include <cmath>
#include <string>

#include "isoprobe/rng.hpp"

namespace fixtures {

using isoprobe::EmbeddingDump;
using isoprobe::Index;
using isoprobe::Matrix;
using isoprobe::Rng;
using isoprobe::TokenRecord;
using isoprobe::Vector;

Matrix gaussian_matrix(Index n, Index d, std::uint64_t seed, double scale) {
  Rng rng(seed);
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = scale * rng.normal();
  return m;
}

Matrix scaled_gaussian_matrix(Index n, const std::vector<double>& scales,
                              std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, static_cast<Index>(scales.size()));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = scales[static_cast<std::size_t>(j)] * rng.normal();
  return m;
}

Eigen::MatrixXd random_orthogonal(Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  // Normalize the sign ambiguity so the result is a function of the seed.
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

oracle::Rows to_rows(const Matrix& m) {
  oracle::Rows rows(static_cast<std::size_t>(m.rows()),
                    std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          m(i, j);
  return rows;
}

Matrix from_rows(const oracle::Rows& rows) {
  Matrix m(static_cast<Index>(rows.size()),
           static_cast<Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

EmbeddingDump matrix_dump(const Matrix& m, std::uint32_t layer) {
  EmbeddingDump dump;
  dump.dim = static_cast<int>(m.cols());
  dump.vectors = m;
  for (Index i = 0; i < m.rows(); ++i) {
    TokenRecord r;
    r.token = "t" + std::to_string(i);
    r.layer = layer;
    r.sentence_id = static_cast<std::uint32_t>(i);
    r.position = 1;
    r.is_poolable = true;
    r.frequency = static_cast<std::uint64_t>(i) + 1;
    dump.records.push_back(std::move(r));
  }
  return dump;
}

EmbeddingDump layered_dump(int n_layers, std::uint64_t seed) {
  constexpr Index kDim = 16;
  constexpr Index kTokensPerLayer = 300;
  constexpr Index kClsPerLayer = 30;

  Rng rng(seed);
  Vector direction = Vector::Zero(kDim);
  for (Index j = 0; j < kDim; ++j) direction[j] = 1.0;
  direction /= direction.norm();

  EmbeddingDump dump;
  dump.dim = static_cast<int>(kDim);
  const Index rows_per_layer = kTokensPerLayer + kClsPerLayer;
  dump.vectors.resize(static_cast<Index>(n_layers) * rows_per_layer, kDim);

  Index row = 0;
  for (int layer = 0; layer < n_layers; ++layer) {
    const double stretch = 1.0 + 2.0 * layer;
    for (Index t = 0; t < kTokensPerLayer; ++t) {
      for (Index j = 0; j < kDim; ++j)
        dump.vectors(row, j) = (j == 0 ? stretch : 1.0) * rng.normal();
      TokenRecord r;
      r.token = "w" + std::to_string(t);
      r.layer = static_cast<std::uint32_t>(layer);
      r.sentence_id = static_cast<std::uint32_t>(t);
      r.position = 1;
      r.is_poolable = true;
      r.frequency = static_cast<std::uint64_t>(t) + 1;
      dump.records.push_back(std::move(r));
      ++row;
    }
    // CLS rows: a tight cluster at a large offset, spread mostly along the
    // offset direction so the extreme partition-function directions align
    // with it. Offset norms start above the deepest all-token spread
    // ((1+2L)^2 - 1)/2 in log-partition units.
    const double offset =
        0.5 * std::pow(1.0 + 2.0 * (n_layers - 1), 2.0) + 2.0 + 2.0 * layer;
    for (Index t = 0; t < kClsPerLayer; ++t) {
      Vector perp(kDim);
      for (Index j = 0; j < kDim; ++j) perp[j] = rng.normal();
      double along = rng.normal();
      Vector v = offset * direction + 0.3 * along * direction + 0.02 * perp;
      dump.vectors.row(row) = v.transpose();
      TokenRecord r;
      r.token = "[CLS]";
      r.layer = static_cast<std::uint32_t>(layer);
      r.sentence_id = static_cast<std::uint32_t>(kTokensPerLayer + t);
      r.position = 0;
      r.is_cls = true;
      r.is_poolable = false;
      r.frequency = 1;
      dump.records.push_back(std::move(r));
      ++row;
    }
  }
  return dump;
}

namespace {

// Shared scaffolding for the two planted-signal datasets. Each sentence s
// gets a unit code z_s in R^code_dim; gold(a, b) = 2.5 * (1 + cos(z_a, z_b))
// maps cosine into [0, 5]. Every unordered sentence pair becomes one rated
// pair. make_token produces the token vectors of one sentence from its code.
template <typename MakeToken>
StsFixture build_sts_fixture(std::uint64_t seed, Index code_dim, Index dim,
                             MakeToken make_token) {
  constexpr Index kSentences = 40;
  constexpr Index kTokensPerSentence = 4;

  Rng rng(seed);
  std::vector<Vector> codes;
  for (Index s = 0; s < kSentences; ++s) {
    Vector z(code_dim);
    for (Index j = 0; j < code_dim; ++j) z[j] = rng.normal();
    z /= z.norm();
    codes.push_back(std::move(z));
  }

  StsFixture fx;
  fx.dump.dim = static_cast<int>(dim);
  fx.dump.vectors.resize(kSentences * kTokensPerSentence, dim);
  Index row = 0;
  for (Index s = 0; s < kSentences; ++s) {
    for (Index t = 0; t < kTokensPerSentence; ++t) {
      fx.dump.vectors.row(row) =
          make_token(codes[static_cast<std::size_t>(s)], rng).transpose();
      TokenRecord r;
      r.token = "s" + std::to_string(s) + "t" + std::to_string(t);
      r.layer = 0;
      r.sentence_id = static_cast<std::uint32_t>(s);
      r.position = static_cast<std::uint32_t>(t) + 1;
      r.is_poolable = true;
      r.frequency = static_cast<std::uint64_t>(row) + 1;
      fx.dump.records.push_back(std::move(r));
      ++row;
    }
  }
  for (Index a = 0; a < kSentences; ++a)
    for (Index b = a + 1; b < kSentences; ++b) {
      double cosine = codes[static_cast<std::size_t>(a)]
                          .dot(codes[static_cast<std::size_t>(b)]);
      fx.dataset.pairs.push_back({static_cast<std::uint32_t>(a),
                                  static_cast<std::uint32_t>(b),
                                  2.5 * (1.0 + cosine)});
    }
  return fx;
}

}  // namespace

StsFixture sts_fixture_signal_orthogonal(std::uint64_t seed) {
  constexpr Index kNoiseDims = 4;
  constexpr Index kCodeDims = 12;
  return build_sts_fixture(
      seed, kCodeDims, kNoiseDims + kCodeDims, [](const Vector& z, Rng& rng) {
        Vector v(kNoiseDims + kCodeDims);
        for (Index j = 0; j < kNoiseDims; ++j) v[j] = 10.0 * rng.normal();
        for (Index j = 0; j < kCodeDims; ++j)
          v[kNoiseDims + j] = z[j] + 0.1 * rng.normal();
        return v;
      });
}

StsFixture sts_fixture_signal_dominant(std::uint64_t seed) {
  constexpr Index kCodeDims = 4;
  constexpr Index kNoiseDims = 12;
  return build_sts_fixture(
      seed, kCodeDims, kCodeDims + kNoiseDims, [](const Vector& z, Rng& rng) {
        Vector v(kCodeDims + kNoiseDims);
        for (Index j = 0; j < kCodeDims; ++j)
          v[j] = 10.0 * (z[j] + 0.1 * rng.normal());
        for (Index j = 0; j < kNoiseDims; ++j)
          v[kCodeDims + j] = 0.3 * rng.normal();
        return v;
      });
}

}  // namespace fixtures
