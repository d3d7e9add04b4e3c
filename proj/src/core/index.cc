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

#include "cfield/index.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

#include "parallel.h"

namespace cfield {
namespace {

template <typename T>
double SquaredL2(std::span<const T> a, std::span<const float> b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum;
}

template <typename T>
double Cosine(std::span<const T> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 2.0;
  const double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(d, 0.0, 2.0);
}

// Max-heap on NeighborLess: top() is the current worst of the kept k.
struct WorstFirst {
  bool operator()(const Neighbor& a, const Neighbor& b) const { return NeighborLess(a, b); }
};
using NeighborHeap = std::priority_queue<Neighbor, std::vector<Neighbor>, WorstFirst>;

std::vector<Neighbor> ScanShard(std::span<const double> query, size_t k,
                                const SearchOptions& options, const Shard& shard,
                                uint32_t shard_id) {
  NeighborHeap heap;
  const bool l2 = options.metric == Metric::kL2;
  for (uint64_t i = 0; i < shard.size(); ++i) {
    const RecordRef ref{shard_id, i};
    double distance;
    if (l2) {
      const double sq = SquaredL2(query, shard.vector(i));
      // Cheap reject on squared distance; the margin keeps any candidate whose
      // rounded sqrt could still tie the current worst.
      if (heap.size() == k) {
        const double worst = heap.top().distance;
        if (sq > worst * worst * (1.0 + 1e-12)) continue;
      }
      distance = std::sqrt(sq);
    } else {
      distance = Cosine(query, shard.vector(i));
    }
    if (!(distance <= options.d_max)) continue;
    if (heap.size() == k && !NeighborLess({ref, distance}, heap.top())) continue;
    if (options.filter && !options.filter(shard, ref)) continue;
    heap.push({ref, distance});
    if (heap.size() > k) heap.pop();
  }
  std::vector<Neighbor> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<double> ToDouble(std::span<const float> v) { return {v.begin(), v.end()}; }

}  // namespace

double L2Distance(std::span<const float> a, std::span<const float> b) {
  return std::sqrt(SquaredL2(a, b));
}
double L2Distance(std::span<const double> a, std::span<const float> b) {
  return std::sqrt(SquaredL2(a, b));
}
double CosineDistance(std::span<const float> a, std::span<const float> b) { return Cosine(a, b); }
double CosineDistance(std::span<const double> a, std::span<const float> b) { return Cosine(a, b); }

std::vector<Neighbor> MergeNeighbors(std::vector<std::vector<Neighbor>> lists, size_t k) {
  std::vector<Neighbor> all;
  for (auto& l : lists) all.insert(all.end(), l.begin(), l.end());
  std::sort(all.begin(), all.end(), NeighborLess);
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<Neighbor> Search(std::span<const double> query, size_t k,
                             const SearchOptions& options, std::span<const Shard> shards) {
  if (k == 0) throw ParameterError("k must be at least 1");
  if (!(options.d_max > 0.0)) throw ParameterError("d_max must be positive");
  if (shards.empty()) return {};
  const uint32_t dim = CommonDim(shards);
  if (query.size() != dim) {
    throw DimensionError("query has length " + std::to_string(query.size()) +
                         ", store dim is " + std::to_string(dim));
  }
  std::vector<std::vector<Neighbor>> per_shard(shards.size());
  internal::ParallelFor(shards.size(), [&](size_t s) {
    per_shard[s] = ScanShard(query, k, options, shards[s], static_cast<uint32_t>(s));
  });
  return MergeNeighbors(std::move(per_shard), k);
}

std::vector<Neighbor> Knn(std::span<const double> query, size_t k, Metric metric,
                          std::span<const Shard> shards) {
  SearchOptions options;
  options.metric = metric;
  return Search(query, k, options, shards);
}

std::vector<Neighbor> Knn(std::span<const float> query, size_t k, Metric metric,
                          std::span<const Shard> shards) {
  return Knn(ToDouble(query), k, metric, shards);
}

std::vector<Neighbor> KnnWithin(std::span<const float> query, size_t k, double d_max,
                                Metric metric, std::span<const Shard> shards) {
  SearchOptions options;
  options.metric = metric;
  options.d_max = d_max;
  return Search(ToDouble(query), k, options, shards);
}

double ChamferDistance(std::span<const std::vector<float>> a,
                       std::span<const std::vector<float>> b) {
  if (a.empty() || b.empty()) throw ParameterError("Chamfer distance needs non-empty sets");
  auto directed = [](std::span<const std::vector<float>> from,
                     std::span<const std::vector<float>> to) {
    double sum = 0.0;
    for (const auto& x : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : to) best = std::min(best, CosineDistance(x, y));
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return directed(a, b) + directed(b, a);
}

std::vector<RankedSequence> ChamferRerank(std::span<const std::vector<float>> query_seq,
                                          std::span<const SequenceRef> candidates,
                                          std::span<const Shard> shards, size_t k) {
  if (candidates.empty()) throw ParameterError("no candidate sequences");
  if (query_seq.empty()) throw EmptySequenceError("query sequence is empty");

  std::vector<std::vector<std::vector<float>>> candidate_vectors;
  candidate_vectors.reserve(candidates.size());
  for (const SequenceRef& c : candidates) {
    if (c.shard >= shards.size()) {
      throw NotFoundError("unknown shard " + std::to_string(c.shard));
    }
    const Shard& shard = shards[c.shard];
    const SequenceRange range = shard.sequence_range(c.seq_id);
    std::vector<std::vector<float>> vectors;
    for (uint64_t i = range.begin; i < range.end; ++i) {
      auto v = shard.vector(i);
      vectors.emplace_back(v.begin(), v.end());
    }
    candidate_vectors.push_back(std::move(vectors));
  }

  std::map<SequenceRef, uint64_t> hits;
  for (const auto& q : query_seq) {
    for (const Neighbor& n : Knn(std::span<const float>(q), k, Metric::kCosine, shards)) {
      const Shard& shard = shards[n.ref.shard];
      ++hits[SequenceRef{n.ref.shard, shard.seq_id(n.ref.index)}];
    }
  }

  std::vector<RankedSequence> ranked;
  ranked.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    RankedSequence r;
    r.sequence = candidates[i];
    auto it = hits.find(candidates[i]);
    r.frequency = it == hits.end() ? 0 : it->second;
    r.chamfer = ChamferDistance(query_seq, candidate_vectors[i]);
    ranked.push_back(r);
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedSequence& a, const RankedSequence& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    if (a.chamfer != b.chamfer) return a.chamfer < b.chamfer;
    return a.sequence < b.sequence;
  });
  return ranked;
}

}  // namespace cfield
