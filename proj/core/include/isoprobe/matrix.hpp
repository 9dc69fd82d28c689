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

#ifndef ISOPROBE_MATRIX_HPP
#define ISOPROBE_MATRIX_HPP

#include <Eigen/Dense>
#include <vector>

#include "isoprobe/error.hpp"

namespace isoprobe {

// N x d embedding matrix, one vector per row. Row-major so a row is
// contiguous for I/O and per-row arithmetic.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// Mean over rows, accumulated in ascending row order. Every centering step in
// the library goes through these two helpers so that global and per-cluster
// paths produce bit-identical arithmetic on identical inputs.
inline Vector mean_of_rows(const Matrix& m) {
  Vector acc = Vector::Zero(m.cols());
  for (Index i = 0; i < m.rows(); ++i) acc += m.row(i).transpose();
  return acc / static_cast<double>(m.rows());
}

inline Vector mean_of_rows(const Matrix& m, const std::vector<Index>& rows) {
  Vector acc = Vector::Zero(m.cols());
  for (Index i : rows) acc += m.row(i).transpose();
  return acc / static_cast<double>(rows.size());
}

inline Matrix gather_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace isoprobe

#endif  // ISOPROBE_MATRIX_HPP
