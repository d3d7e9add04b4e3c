/*
 * Copyright 2026 The Concept Field Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Field geometry on dense clusters.
//
// With r_i = p_i - c the offset of member i from the centroid and v_i its
// delta, the divergence estimate is
//   D = (d / N) sum_i v_i . r_i / |r_i|^2
// and the angular momentum matrix is
//   M = (d / N) sum_i (r_i v_i^T - v_i r_i^T) / |r_i|^2,
// whose Frobenius norm measures circulation about the centroid. Members
// closer than kMinRadius to the centroid are left out of both sums.

#ifndef CFIELD_GEOMETRY_H_
#define CFIELD_GEOMETRY_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cfield/store.h"

namespace cfield {

inline constexpr double kMinRadius = 1e-9;
// Above this dimension M is never materialized.
inline constexpr size_t kMaxExplicitDim = 64;

// Positions and deltas of the cluster members, row-major (size x dim).
struct ClusterSample {
  size_t dim = 0;
  std::vector<double> centroid;
  std::vector<double> positions;
  std::vector<double> velocities;

  size_t size() const { return dim == 0 ? 0 : positions.size() / dim; }
};

struct Cluster {
  uint32_t cluster_id = 0;
  std::vector<double> centroid;
  std::vector<RecordRef> members;
};

struct ClusterParams {
  size_t n_clusters = 8;
  size_t min_size = 2;
  uint64_t seed = 0;
  size_t max_iterations = 100;
};

// Seeded k-means over every record that carries a delta. The centroid of a
// returned cluster is the mean of its members; clusters smaller than
// min_size are dropped (ids of the survivors are kept).
std::vector<Cluster> FindDenseClusters(std::span<const Shard> shards, const ClusterParams& params);

// All delta-carrying records within `radius` (L2) of `probe`. Empty when
// fewer than min_size records qualify.
std::optional<Cluster> BallCluster(std::span<const double> probe, double radius, size_t min_size,
                                   std::span<const Shard> shards, uint32_t cluster_id = 0);

ClusterSample SampleCluster(const Cluster& cluster, std::span<const Shard> shards);

// Both throw DegenerateClusterError when every member sits on the centroid.
double Divergence(const ClusterSample& sample);

struct AngularMomentum {
  std::vector<double> matrix;  // dim x dim row-major; empty when dim > kMaxExplicitDim
  double circulation = 0.0;    // Frobenius norm of M
};

AngularMomentum ComputeAngularMomentum(const ClusterSample& sample);

// Circulation via the Gram identity
//   |M|_F^2 = (2 d^2 / N^2) sum_{i,j} [(r_i.r_j)(v_i.v_j) - (r_i.v_j)(r_j.v_i)]
//                                     / (|r_i|^2 |r_j|^2),
// which needs no d x d storage.
double CirculationGram(const ClusterSample& sample);
// Circulation from an explicitly accumulated M (any dim).
double CirculationExplicit(const ClusterSample& sample);

struct ClusterDiagnostics {
  uint32_t cluster_id = 0;
  std::vector<double> centroid;
  std::vector<RecordRef> member_refs;
  size_t size = 0;  // members used in the sums
  double divergence = 0.0;
  double circulation = 0.0;
  // Members nearest to the centroid, closest first.
  std::vector<RecordRef> top_member_refs;
};

ClusterDiagnostics Diagnose(const Cluster& cluster, std::span<const Shard> shards,
                            size_t top_members = 5);

enum class RankBy { kDivergenceMax, kDivergenceMin, kCirculationMax };

// Orders by the requested statistic (raw signed values), ties by cluster id.
std::vector<ClusterDiagnostics> RankExtremes(std::vector<ClusterDiagnostics> clusters, RankBy by);

}  // namespace cfield

#endif  // CFIELD_GEOMETRY_H_
