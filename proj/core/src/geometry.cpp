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

#include "isoprobe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "isoprobe/parallel.hpp"
#include "isoprobe/rng.hpp"

namespace isoprobe {

namespace {

// Fixed chunk sizes. These are part of the reproducibility contract: chunk
// boundaries never depend on the worker count, so per-chunk partial results
// are identical for any --threads value and get combined in chunk order.
constexpr Index kCovRowChunk = 4096;
constexpr Index kDirectionBlock = 64;

constexpr double kRankEps = 1e-10;
constexpr double kUnitEps = 1e-8;

void check_unit(double norm) {
  if (std::abs(norm - 1.0) > kUnitEps)
    throw_contract("direction must be unit length, got norm " +
                   std::to_string(norm));
}

Eigen::MatrixXd covariance_of_centered(const Matrix& xc) {
  const Index n = xc.rows();
  const Index d = xc.cols();
  const std::int64_t n_chunks = chunk_count(n, kCovRowChunk);

  std::vector<Eigen::MatrixXd> partials(static_cast<std::size_t>(n_chunks));
  parallel_chunks(n_chunks, [&](std::int64_t c) {
    const Index begin = static_cast<Index>(c) * kCovRowChunk;
    const Index rows = std::min(kCovRowChunk, n - begin);
    const auto block = xc.middleRows(begin, rows);
    partials[static_cast<std::size_t>(c)].noalias() =
        block.transpose() * block;
  });

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (auto& p : partials) cov += p;
  cov /= static_cast<double>(n);
  // The chunked products are symmetric only up to rounding; symmetrize so
  // the eigensolver sees one well-defined matrix.
  cov = ((cov + cov.transpose()) * 0.5).eval();
  return cov;
}

void fix_eigenvector_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Index best = 0;
  double best_abs = std::abs(v[0]);
  for (Index i = 1; i < v.size(); ++i) {
    double a = std::abs(v[i]);
    if (a > best_abs) {  // strict: ties keep the lowest index
      best_abs = a;
      best = i;
    }
  }
  if (v[best] < 0.0) v = -v;
}

}  // namespace

nlohmann::json IsotropyReport::to_json() const {
  return nlohmann::json{{"isotropy", isotropy},
                        {"log_f_min", log_f_min},
                        {"log_f_max", log_f_max},
                        {"argmin_index", argmin_index},
                        {"argmax_index", argmax_index},
                        {"n_vectors", n_vectors},
                        {"dim", dim},
                        {"rank_deficient", rank_deficient}};
}

std::pair<Matrix, Vector> center(const Matrix& m) {
  if (m.rows() < 1) throw_contract("cannot center an empty matrix");
  Vector mean = mean_of_rows(m);
  Matrix centered = m;
  centered.rowwise() -= mean.transpose();
  return {std::move(centered), std::move(mean)};
}

SpectralDecomposition spectral_decomposition(const Matrix& m) {
  if (m.rows() < 2)
    throw_contract("spectral decomposition needs at least 2 vectors, got " +
                   std::to_string(m.rows()));
  if (!all_finite(m))
    throw_contract("spectral decomposition input has non-finite entries");

  auto [xc, mean] = center(m);
  Eigen::MatrixXd cov = covariance_of_centered(xc);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw_numeric("eigendecomposition of the covariance did not converge");

  const Index d = m.cols();
  SpectralDecomposition out;
  out.mean = std::move(mean);
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d, d);
  // Solver order is ascending; store descending, clamped at zero (tiny
  // negative values are rounding artifacts of a PSD matrix).
  for (Index k = 0; k < d; ++k) {
    out.eigenvalues[k] = std::max(0.0, solver.eigenvalues()[d - 1 - k]);
    out.eigenvectors.col(k) = solver.eigenvectors().col(d - 1 - k);
    fix_eigenvector_sign(out.eigenvectors.col(k));
  }
  const double lambda_max = out.eigenvalues[0];
  out.rank_deficient =
      out.eigenvalues[d - 1] <= kRankEps * std::max(1.0, lambda_max);
  return out;
}

double log_partition(const Vector& u, const Matrix& m) {
  if (u.size() != m.cols())
    throw_contract("direction has dimension " + std::to_string(u.size()) +
                   " but vectors have " + std::to_string(m.cols()));
  if (m.rows() < 1) throw_contract("log partition of an empty matrix");
  check_unit(u.norm());

  Vector s = m * u;
  const double shift = s.maxCoeff();
  double sum = 0.0;
  for (Index i = 0; i < s.size(); ++i) sum += std::exp(s[i] - shift);
  return shift + std::log(sum);
}

Vector log_partition_batch(const Matrix& m,
                           const Eigen::MatrixXd& directions) {
  if (directions.rows() != m.cols())
    throw_contract("directions have dimension " +
                   std::to_string(directions.rows()) + " but vectors have " +
                   std::to_string(m.cols()));
  if (m.rows() < 1) throw_contract("log partition of an empty matrix");
  for (Index c = 0; c < directions.cols(); ++c)
    check_unit(directions.col(c).norm());

  const Index n_dirs = directions.cols();
  const std::int64_t n_blocks = chunk_count(n_dirs, kDirectionBlock);
  Vector out(n_dirs);

  parallel_chunks(n_blocks, [&](std::int64_t b) {
    const Index begin = static_cast<Index>(b) * kDirectionBlock;
    const Index cols = std::min(kDirectionBlock, n_dirs - begin);
    Eigen::MatrixXd scores = m * directions.middleCols(begin, cols);
    for (Index c = 0; c < cols; ++c) {
      const double shift = scores.col(c).maxCoeff();
      double sum = 0.0;
      for (Index i = 0; i < scores.rows(); ++i)
        sum += std::exp(scores(i, c) - shift);
      out[begin + c] = shift + std::log(sum);
    }
  });
  return out;
}

IsotropyReport isotropy_score(const Matrix& m) {
  if (m.rows() < 2)
    throw_contract("isotropy needs at least 2 vectors, got " +
                   std::to_string(m.rows()));

  SpectralDecomposition sd = spectral_decomposition(m);
  const Index d = m.cols();

  // Candidate directions: both signs of every eigenvector, interleaved as
  // +e0, -e0, +e1, -e1, ... The score is therefore independent of the sign
  // convention the decomposition picked.
  Eigen::MatrixXd candidates(d, 2 * d);
  for (Index k = 0; k < d; ++k) {
    candidates.col(2 * k) = sd.eigenvectors.col(k);
    candidates.col(2 * k + 1) = -sd.eigenvectors.col(k);
  }

  // The partition function sees the rows as given; only the directions come
  // from the centered covariance.
  Vector logf = log_partition_batch(m, candidates);

  Index argmin = 0;
  Index argmax = 0;
  for (Index c = 1; c < logf.size(); ++c) {
    if (logf[c] < logf[argmin]) argmin = c;
    if (logf[c] > logf[argmax]) argmax = c;
  }

  IsotropyReport report;
  report.log_f_min = logf[argmin];
  report.log_f_max = logf[argmax];
  report.isotropy = std::exp(report.log_f_min - report.log_f_max);
  report.argmin_index = static_cast<int>(argmin / 2);
  report.argmax_index = static_cast<int>(argmax / 2);
  report.n_vectors = m.rows();
  report.dim = static_cast<int>(d);
  report.rank_deficient = sd.rank_deficient;
  if (!std::isfinite(report.isotropy))
    throw_numeric("isotropy came out non-finite");
  return report;
}

double average_random_cosine(const Matrix& m, std::int64_t n_pairs,
                             std::uint64_t seed, Warnings* warnings) {
  if (m.rows() < 2)
    throw_contract("random cosine needs at least 2 vectors");
  if (n_pairs < 1) throw_contract("n_pairs must be positive");

  Rng rng(seed);
  const std::size_t n = static_cast<std::size_t>(m.rows());
  double acc = 0.0;
  std::int64_t used = 0;
  std::int64_t skipped = 0;
  for (std::int64_t p = 0; p < n_pairs; ++p) {
    std::size_t i = rng.index(n);
    std::size_t j = rng.index(n - 1);
    if (j >= i) ++j;  // distinct pair, uniform
    double ni = m.row(static_cast<Index>(i)).norm();
    double nj = m.row(static_cast<Index>(j)).norm();
    if (ni == 0.0 || nj == 0.0) {
      ++skipped;
      continue;
    }
    acc += m.row(static_cast<Index>(i)).dot(m.row(static_cast<Index>(j))) /
           (ni * nj);
    ++used;
  }
  if (skipped > 0)
    add_warning(warnings, "average_random_cosine: skipped " +
                              std::to_string(skipped) +
                              " pairs with a zero-norm vector");
  if (used == 0)
    throw_numeric("average_random_cosine: every sampled pair had a zero-norm "
                  "vector");
  return acc / static_cast<double>(used);
}

Matrix project_2d(const Matrix& m) {
  if (m.cols() < 2)
    throw_contract("2-d projection needs dimension >= 2, got " +
                   std::to_string(m.cols()));
  SpectralDecomposition sd = spectral_decomposition(m);
  Matrix centered = m;
  centered.rowwise() -= sd.mean.transpose();
  Matrix out(m.rows(), 2);
  out.noalias() = centered * sd.eigenvectors.leftCols(2);
  return out;
}

}  // namespace isoprobe
