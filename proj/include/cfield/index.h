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

// Exact (flat) nearest-neighbor search over a list of shards.
//
// Results are ordered by (distance, shard, record index) ascending, so the
// output is a total order independent of how shards are scanned.

#ifndef CFIELD_INDEX_H_
#define CFIELD_INDEX_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "cfield/store.h"

namespace cfield {

enum class Metric { kL2, kCosine };

struct Neighbor {
  RecordRef ref;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Ordering used everywhere a neighbor list is sorted or merged.
inline bool NeighborLess(const Neighbor& a, const Neighbor& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.ref < b.ref;
}

double L2Distance(std::span<const float> a, std::span<const float> b);
double L2Distance(std::span<const double> a, std::span<const float> b);
// 1 - cos(a, b), clamped to [0, 2]; 2 when either vector has zero norm.
double CosineDistance(std::span<const float> a, std::span<const float> b);
double CosineDistance(std::span<const double> a, std::span<const float> b);

using RecordFilter = std::function<bool(const Shard&, RecordRef)>;

struct SearchOptions {
  Metric metric = Metric::kL2;
  double d_max = std::numeric_limits<double>::infinity();
  // Records rejected by the filter are skipped before `k` is applied.
  RecordFilter filter;
};

// k nearest records across all shards. An empty store yields an empty list.
std::vector<Neighbor> Knn(std::span<const float> query, size_t k, Metric metric,
                          std::span<const Shard> shards);
std::vector<Neighbor> Knn(std::span<const double> query, size_t k, Metric metric,
                          std::span<const Shard> shards);

// Knn restricted to distance <= d_max. An empty result is the out-of-corpus
// signal.
std::vector<Neighbor> KnnWithin(std::span<const float> query, size_t k, double d_max,
                                Metric metric, std::span<const Shard> shards);

// General form. Queries are evaluated in double precision against the
// float32 records. Throws DimensionError when the query length differs from
// the store dimension.
std::vector<Neighbor> Search(std::span<const double> query, size_t k,
                             const SearchOptions& options, std::span<const Shard> shards);

// Merges per-shard neighbor lists into the global top k.
std::vector<Neighbor> MergeNeighbors(std::vector<std::vector<Neighbor>> lists, size_t k);

// Sequence address across shards.
struct SequenceRef {
  uint32_t shard = 0;
  uint32_t seq_id = 0;

  friend bool operator==(const SequenceRef&, const SequenceRef&) = default;
  friend auto operator<=>(const SequenceRef&, const SequenceRef&) = default;
};

struct RankedSequence {
  SequenceRef sequence;
  uint64_t frequency = 0;  // hits among the query's per-vector top-k lists
  double chamfer = 0.0;
};

// Symmetric Chamfer distance under cosine distance: mean over `a` of the
// closest vector in `b` plus mean over `b` of the closest vector in `a`.
double ChamferDistance(std::span<const std::vector<float>> a,
                       std::span<const std::vector<float>> b);

// Ranks candidate sequences by descending id frequency among the per-vector
// top `k` neighbors of the query (cosine metric), then by ascending Chamfer
// distance, then by sequence address.
std::vector<RankedSequence> ChamferRerank(std::span<const std::vector<float>> query_seq,
                                          std::span<const SequenceRef> candidates,
                                          std::span<const Shard> shards, size_t k = 10);

}  // namespace cfield

#endif  // CFIELD_INDEX_H_
