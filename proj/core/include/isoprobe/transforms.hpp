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

#ifndef ISOPROBE_TRANSFORMS_HPP
#define ISOPROBE_TRANSFORMS_HPP

#include <cstdint>
#include <vector>

#include "isoprobe/error.hpp"
#include "isoprobe/matrix.hpp"

namespace isoprobe {

// Defaults for cluster count and discarded directions.
inline constexpr int kDefaultClusterCount = 27;
inline constexpr int kDefaultRemovedDirections = 12;

enum class DirectionSelector { kTop, kLeast };

// How many covariance directions to null out, and from which end of the
// spectrum. count <= d.
struct DirectionRemovalSpec {
  int count = 0;
  DirectionSelector selector = DirectionSelector::kTop;
};

// Lloyd's algorithm output. Labels index [0, k); every cluster is non-empty.
// inertia is the sum of squared distances to the assigned centroids,
// recomputed against the final centroids. inertia_history records the
// assignment-phase inertia of each iteration and is non-increasing.
struct ClusterAssignment {
  int k = 0;
  std::vector<int> labels;
  Matrix centroids;  // k x d
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_history;
};

// k-means++ initialization, Euclidean distance, deterministic per seed.
// Stops when the relative inertia improvement drops below 1e-6 or after 300
// iterations. Empty clusters are repaired by reassigning the point farthest
// from its centroid. Requires 1 <= k <= N.
ClusterAssignment kmeans(const Matrix& m, int k, std::uint64_t seed);

// Moves all embeddings to the center (discards the mean).
Matrix zero_mean(const Matrix& m);

// k-means, then each cluster is made zero-mean separately. Row order is
// preserved.
Matrix clustering_zm(const Matrix& m, int k, std::uint64_t seed);

// Centers m, then nulls the components along the selected covariance
// directions: highest-eigenvalue for kTop, lowest for kLeast.
Matrix remove_directions(const Matrix& m, const DirectionRemovalSpec& spec);

// Zero-mean followed by discarding the d_remove top dominant directions.
Matrix global_abtt(const Matrix& m, int d_remove);

// k-means, per-cluster zero-mean, then per-cluster removal of d_remove
// directions selected from that cluster's own covariance. Singleton clusters
// are passed through zero-mean only, with a warning.
Matrix cluster_based(const Matrix& m, int k, int d_remove, std::uint64_t seed,
                     DirectionSelector selector = DirectionSelector::kTop,
                     Warnings* warnings = nullptr);

}  // namespace isoprobe

#endif  // ISOPROBE_TRANSFORMS_HPP
