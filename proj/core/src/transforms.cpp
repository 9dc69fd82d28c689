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

#include "isoprobe/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "isoprobe/geometry.hpp"
#include "isoprobe/parallel.hpp"
#include "isoprobe/rng.hpp"

namespace isoprobe {

namespace {

constexpr Index kAssignRowChunk = 2048;
constexpr Index kRemoveRowChunk = 4096;
constexpr int kMaxIterations = 300;
constexpr double kRelativeTol = 1e-6;

// Nearest-centroid pass. Fixed row chunks and per-chunk inertia partials
// summed in chunk order keep the result independent of the worker count.
// Ties go to the lowest centroid index. Returns the assignment inertia.
double assign_labels(const Matrix& m, const Matrix& centroids,
                     std::vector<int>& labels, std::vector<double>& dist2) {
  const Index n = m.rows();
  const int k = static_cast<int>(centroids.rows());
  Vector cnorm(k);
  for (int j = 0; j < k; ++j) cnorm[j] = centroids.row(j).squaredNorm();

  const std::int64_t n_chunks = chunk_count(n, kAssignRowChunk);
  std::vector<double> partials(static_cast<std::size_t>(n_chunks), 0.0);
  parallel_chunks(n_chunks, [&](std::int64_t c) {
    const Index begin = static_cast<Index>(c) * kAssignRowChunk;
    const Index rows = std::min(kAssignRowChunk, n - begin);
    Eigen::MatrixXd scores = m.middleRows(begin, rows) * centroids.transpose();
    double local = 0.0;
    for (Index r = 0; r < rows; ++r) {
      // |x - c|^2 = |x|^2 + (|c|^2 - 2 x.c); minimize the parenthesis.
      int best = 0;
      double best_val = cnorm[0] - 2.0 * scores(r, 0);
      for (int j = 1; j < k; ++j) {
        double val = cnorm[j] - 2.0 * scores(r, j);
        if (val < best_val) {
          best_val = val;
          best = j;
        }
      }
      const Index i = begin + r;
      labels[static_cast<std::size_t>(i)] = best;
      double d2 = std::max(0.0, m.row(i).squaredNorm() + best_val);
      dist2[static_cast<std::size_t>(i)] = d2;
      local += d2;
    }
    partials[static_cast<std::size_t>(c)] = local;
  });

  double inertia = 0.0;
  for (double p : partials) inertia += p;
  return inertia;
}

// Gives every empty cluster the point currently farthest from its assigned
// centroid, never leaving the donor empty and never moving a point twice.
// Scans in ascending order throughout, so the repair is deterministic.
void repair_empty_clusters(const Matrix& m, std::vector<int>& labels,
                           const std::vector<double>& dist2, int k) {
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  std::vector<bool> moved(labels.size(), false);

  for (int e = 0; e < k; ++e) {
    if (counts[static_cast<std::size_t>(e)] > 0) continue;
    std::ptrdiff_t pick = -1;
    double pick_dist = -1.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (moved[i] || counts[static_cast<std::size_t>(labels[i])] < 2)
        continue;
      if (dist2[i] > pick_dist) {
        pick_dist = dist2[i];
        pick = static_cast<std::ptrdiff_t>(i);
      }
    }
    if (pick < 0)
      throw_numeric("cannot repair empty cluster " + std::to_string(e));
    --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(pick)])];
    labels[static_cast<std::size_t>(pick)] = e;
    counts[static_cast<std::size_t>(e)] = 1;
    moved[static_cast<std::size_t>(pick)] = true;
  }
}

Matrix update_centroids(const Matrix& m, const std::vector<int>& labels,
                        int k) {
  Matrix centroids = Matrix::Zero(k, m.cols());
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (Index i = 0; i < m.rows(); ++i) {
    centroids.row(labels[static_cast<std::size_t>(i)]) += m.row(i);
    ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
  }
  for (int j = 0; j < k; ++j)
    centroids.row(j) /= static_cast<double>(counts[static_cast<std::size_t>(j)]);
  return centroids;
}

Matrix kmeans_pp_init(const Matrix& m, int k, Rng& rng) {
  const Index n = m.rows();
  Matrix centroids(k, m.cols());
  centroids.row(0) = m.row(static_cast<Index>(rng.index(
      static_cast<std::size_t>(n))));

  std::vector<double> dist2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    dist2[static_cast<std::size_t>(i)] =
        (m.row(i) - centroids.row(0)).squaredNorm();

  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (double d : dist2) total += d;
    Index chosen = -1;
    if (total > 0.0) {
      // Sample proportionally to squared distance.
      const double r = rng.real() * total;
      double cum = 0.0;
      Index last_positive = -1;
      for (Index i = 0; i < n; ++i) {
        const double d = dist2[static_cast<std::size_t>(i)];
        if (d > 0.0) last_positive = i;
        cum += d;
        if (cum > r) {
          chosen = i;
          break;
        }
      }
      if (chosen < 0) chosen = last_positive;  // rounding ran past the end
    } else {
      // All points coincide with chosen centroids; any point will do.
      chosen = static_cast<Index>(rng.index(static_cast<std::size_t>(n)));
    }
    centroids.row(j) = m.row(chosen);
    for (Index i = 0; i < n; ++i) {
      double d = (m.row(i) - centroids.row(j)).squaredNorm();
      double& cur = dist2[static_cast<std::size_t>(i)];
      if (d < cur) cur = d;
    }
  }
  return centroids;
}

// Shared projection step. Both the whole-matrix and the per-cluster paths
// call this with an already centered matrix, so results that should agree
// (one cluster vs. global) agree to the bit.
void remove_from_centered(Matrix& xc, const Eigen::MatrixXd& eigenvectors,
                          const DirectionRemovalSpec& spec) {
  const Eigen::MatrixXd basis =
      spec.selector == DirectionSelector::kTop
          ? eigenvectors.leftCols(spec.count)
          : eigenvectors.rightCols(spec.count);
  const std::int64_t n_chunks = chunk_count(xc.rows(), kRemoveRowChunk);
  parallel_chunks(n_chunks, [&](std::int64_t c) {
    const Index begin = static_cast<Index>(c) * kRemoveRowChunk;
    const Index rows = std::min(kRemoveRowChunk, xc.rows() - begin);
    auto block = xc.middleRows(begin, rows);
    Eigen::MatrixXd coeff = block * basis;
    block.noalias() -= coeff * basis.transpose();
  });
}

Matrix centered_removal(const Matrix& m, const DirectionRemovalSpec& spec) {
  SpectralDecomposition sd = spectral_decomposition(m);
  Matrix xc = m;
  xc.rowwise() -= sd.mean.transpose();
  remove_from_centered(xc, sd.eigenvectors, spec);
  return xc;
}

void check_removal_spec(const DirectionRemovalSpec& spec, Index d) {
  if (spec.count < 0 || spec.count > d)
    throw_contract("cannot remove " + std::to_string(spec.count) +
                   " directions from dimension " + std::to_string(d));
}

Matrix per_cluster_transform(const Matrix& m, int k,
                             const DirectionRemovalSpec& spec,
                             std::uint64_t seed, Warnings* warnings) {
  check_removal_spec(spec, m.cols());
  ClusterAssignment ca = kmeans(m, k, seed);

  Matrix out(m.rows(), m.cols());
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(k));
  for (Index i = 0; i < m.rows(); ++i)
    members[static_cast<std::size_t>(ca.labels[static_cast<std::size_t>(i)])]
        .push_back(i);

  for (int c = 0; c < k; ++c) {
    const std::vector<Index>& rows = members[static_cast<std::size_t>(c)];
    Matrix sub = gather_rows(m, rows);
    Matrix transformed;
    if (spec.count == 0) {
      transformed = zero_mean(sub);
    } else if (sub.rows() < 2) {
      add_warning(warnings, "cluster " + std::to_string(c) +
                                " has a single member; applied zero-mean "
                                "only (no directions to estimate)");
      transformed = zero_mean(sub);
    } else {
      transformed = centered_removal(sub, spec);
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      out.row(rows[i]) = transformed.row(static_cast<Index>(i));
  }
  return out;
}

}  // namespace

ClusterAssignment kmeans(const Matrix& m, int k, std::uint64_t seed) {
  const Index n = m.rows();
  if (n < 1) throw_contract("kmeans on an empty matrix");
  if (k < 1 || static_cast<Index>(k) > n)
    throw_contract("k must be in [1, " + std::to_string(n) + "], got " +
                   std::to_string(k));
  if (!all_finite(m)) throw_contract("kmeans input has non-finite entries");

  Rng rng(seed);
  Matrix centroids = kmeans_pp_init(m, k, rng);

  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  std::vector<double> dist2(static_cast<std::size_t>(n), 0.0);
  std::vector<double> history;
  double prev = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    std::vector<int> new_labels(labels.size());
    double inertia = assign_labels(m, centroids, new_labels, dist2);
    if (inertia > prev) break;  // rounding plateau; keep the previous state
    labels = std::move(new_labels);
    repair_empty_clusters(m, labels, dist2, k);
    history.push_back(inertia);
    const bool converged =
        inertia == 0.0 ||
        (std::isfinite(prev) && (prev - inertia) <= kRelativeTol * prev);
    prev = inertia;
    if (converged) break;
    centroids = update_centroids(m, labels, k);
  }

  ClusterAssignment out;
  out.k = k;
  out.labels = std::move(labels);
  out.centroids = std::move(centroids);
  out.iterations = static_cast<int>(history.size());
  out.inertia_history = std::move(history);
  double inertia = 0.0;
  for (Index i = 0; i < n; ++i)
    inertia +=
        (m.row(i) - out.centroids.row(out.labels[static_cast<std::size_t>(i)]))
            .squaredNorm();
  out.inertia = inertia;
  return out;
}

Matrix zero_mean(const Matrix& m) { return center(m).first; }

Matrix clustering_zm(const Matrix& m, int k, std::uint64_t seed) {
  return per_cluster_transform(m, k, DirectionRemovalSpec{0}, seed, nullptr);
}

Matrix remove_directions(const Matrix& m, const DirectionRemovalSpec& spec) {
  check_removal_spec(spec, m.cols());
  if (spec.count == 0) return zero_mean(m);
  return centered_removal(m, spec);
}

Matrix global_abtt(const Matrix& m, int d_remove) {
  return remove_directions(m,
                           DirectionRemovalSpec{d_remove,
                                                DirectionSelector::kTop});
}

Matrix cluster_based(const Matrix& m, int k, int d_remove, std::uint64_t seed,
                     DirectionSelector selector, Warnings* warnings) {
  return per_cluster_transform(
      m, k, DirectionRemovalSpec{d_remove, selector}, seed, warnings);
}

}  // namespace isoprobe
