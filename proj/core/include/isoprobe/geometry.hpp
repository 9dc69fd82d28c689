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

#ifndef ISOPROBE_GEOMETRY_HPP
#define ISOPROBE_GEOMETRY_HPP

#include <cstdint>
#include <nlohmann/json.hpp>
#include <utility>

#include "isoprobe/error.hpp"
#include "isoprobe/matrix.hpp"

namespace isoprobe {

// Eigendecomposition of the sample covariance (divisor N) of the centered
// matrix. Eigenvalues are sorted descending and clamped at zero; eigenvector
// column k pairs with eigenvalues[k]. Sign convention: in each eigenvector
// the component of largest magnitude is positive, ties resolved to the
// lowest index. rank_deficient is set when the smallest eigenvalue falls
// below 1e-10 * max(1, lambda_max).
struct SpectralDecomposition {
  Vector mean;
  Vector eigenvalues;
  Eigen::MatrixXd eigenvectors;  // d x d, column-major
  bool rank_deficient = false;
};

// Result of the partition-function isotropy measure: the ratio of the
// smallest to the largest partition function over the +/- eigenvector
// candidates. isotropy = exp(log_f_min - log_f_max), always in (0, 1].
struct IsotropyReport {
  double isotropy = 0.0;
  double log_f_min = 0.0;
  double log_f_max = 0.0;
  int argmin_index = 0;  // eigenvector index of the minimizing direction
  int argmax_index = 0;
  std::int64_t n_vectors = 0;
  int dim = 0;
  bool rank_deficient = false;

  nlohmann::json to_json() const;
};

// Subtracts the column mean from every row. Returns the centered matrix and
// the mean.
std::pair<Matrix, Vector> center(const Matrix& m);

// Requires N >= 2.
SpectralDecomposition spectral_decomposition(const Matrix& m);

// log F(u) = log sum_i exp(u . w_i) for a unit direction u, computed with a
// max shift so it never overflows for finite inputs. The sum runs in row
// order, making the value independent of thread count.
double log_partition(const Vector& u, const Matrix& m);

// Evaluates log F at every column of `directions` against the rows of m.
// Blocked and parallel over columns; per-column sums stay sequential.
Vector log_partition_batch(const Matrix& m, const Eigen::MatrixXd& directions);

// The isotropy measure: eigenvectors come from the covariance of the
// centered matrix, but the partition function is evaluated on the rows of m
// as given. Both signs of every eigenvector are candidates, so the score
// does not depend on the decomposition's sign choices.
IsotropyReport isotropy_score(const Matrix& m);

// Mean cosine over n_pairs random row pairs (i != j), deterministic per
// seed. Zero-norm rows are skipped with a warning; all pairs skipped is an
// error. Diagnostic only; near-zero values do not by themselves establish
// isotropy.
double average_random_cosine(const Matrix& m, std::int64_t n_pairs,
                             std::uint64_t seed,
                             Warnings* warnings = nullptr);

// Coordinates of the centered rows on the top-2 eigenvectors. Requires
// d >= 2.
Matrix project_2d(const Matrix& m);

}  // namespace isoprobe

#endif  // ISOPROBE_GEOMETRY_HPP
