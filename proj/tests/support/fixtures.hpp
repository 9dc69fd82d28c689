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

#ifndef ISOPROBE_TESTS_SUPPORT_FIXTURES_HPP
#define ISOPROBE_TESTS_SUPPORT_FIXTURES_HPP

#include <cstdint>
#include <vector>

#include "isoprobe/embedding_store.hpp"
#include "isoprobe/matrix.hpp"
#include "support/oracles.hpp"

namespace fixtures {

isoprobe::Matrix gaussian_matrix(isoprobe::Index n, isoprobe::Index d,
                                 std::uint64_t seed, double scale = 1.0);

// Per-column standard deviations applied to a standard normal sample.
isoprobe::Matrix scaled_gaussian_matrix(isoprobe::Index n,
                                        const std::vector<double>& scales,
                                        std::uint64_t seed);

// Orthogonal matrix from the QR factorization of a Gaussian sample.
Eigen::MatrixXd random_orthogonal(isoprobe::Index d, std::uint64_t seed);

oracle::Rows to_rows(const isoprobe::Matrix& m);
isoprobe::Matrix from_rows(const oracle::Rows& rows);

// Wraps a matrix as a dump: row i becomes token "t<i>" of sentence i at
// position 1, poolable, frequency i+1, single layer.
isoprobe::EmbeddingDump matrix_dump(const isoprobe::Matrix& m,
                                    std::uint32_t layer = 0);

// Multi-layer dump for the layer report: each layer holds regular token
// rows drawn from a zero-mean Gaussian whose first axis is stretched by
// (1 + 2*layer) — so the all-token anisotropy grows strictly with depth —
// plus a tight off-center cluster of CLS rows whose offset norm is chosen
// large enough that every CLS group is more anisotropic than every
// all-token group.
isoprobe::EmbeddingDump layered_dump(int n_layers, std::uint64_t seed);

struct StsFixture {
  isoprobe::EmbeddingDump dump;
  isoprobe::StsDataset dataset;
};

// Both fixtures embed a latent per-sentence code whose cosine similarity
// defines the gold score; they differ in where that signal lives relative
// to the dominant covariance directions.
//
// signal_orthogonal: the first 4 coordinates carry per-token noise scaled
// x10 (the dominant directions); the remaining 12 carry the sentence code.
// Pooled cosines are noise-ridden until the dominant directions are
// removed, so removing 4 top directions raises the correlation.
//
// signal_dominant: the sentence code itself is scaled x10 and occupies the
// top directions; the rest is small noise. Removing 4 top directions
// deletes the signal and the correlation collapses.
StsFixture sts_fixture_signal_orthogonal(std::uint64_t seed);
StsFixture sts_fixture_signal_dominant(std::uint64_t seed);

}  // namespace fixtures

#endif  // ISOPROBE_TESTS_SUPPORT_FIXTURES_HPP
