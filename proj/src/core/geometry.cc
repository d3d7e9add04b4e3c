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

#include "cfield/geometry.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfield/index.h"
#include "random.h"

namespace cfield {
namespace {

double Dot(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double SquaredDistance(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Offsets from the centroid for members outside kMinRadius, with their
// squared norms and velocities.
struct Radial {
  size_t dim = 0;
  std::vector<double> r;
  std::vector<double> v;
  std::vector<double> r2;
  size_t size() const { return r2.size(); }
};

Radial BuildRadial(const ClusterSample& s) {
  if (s.dim == 0 || s.centroid.size() != s.dim || s.velocities.size() != s.positions.size()) {
    throw DimensionError("inconsistent cluster sample");
  }
  Radial out;
  out.dim = s.dim;
  std::vector<double> ri(s.dim);
  for (size_t i = 0; i < s.size(); ++i) {
    const double* p = s.positions.data() + i * s.dim;
    for (size_t c = 0; c < s.dim; ++c) ri[c] = p[c] - s.centroid[c];
    const double norm2 = Dot(ri.data(), ri.data(), s.dim);
    if (std::sqrt(norm2) < kMinRadius) continue;
    out.r.insert(out.r.end(), ri.begin(), ri.end());
    const double* v = s.velocities.data() + i * s.dim;
    out.v.insert(out.v.end(), v, v + s.dim);
    out.r2.push_back(norm2);
  }
  if (out.size() == 0) throw DegenerateClusterError("every member coincides with the centroid");
  return out;
}

std::vector<std::pair<const Shard*, RecordRef>> DeltaRecords(std::span<const Shard> shards) {
  std::vector<std::pair<const Shard*, RecordRef>> out;
  for (size_t s = 0; s < shards.size(); ++s) {
    for (uint64_t i = 0; i < shards[s].size(); ++i) {
      if (shards[s].has_delta(i)) out.push_back({&shards[s], {static_cast<uint32_t>(s), i}});
    }
  }
  return out;
}

}  // namespace

std::vector<Cluster> FindDenseClusters(std::span<const Shard> shards,
                                       const ClusterParams& params) {
  if (params.n_clusters == 0) throw ParameterError("n_clusters must be >= 1");
  const uint32_t dim = CommonDim(shards);
  const auto records = DeltaRecords(shards);
  if (records.empty()) throw StoreEmptyError("store holds no record with a delta");
  if (params.min_size > records.size()) return {};

  const size_t n = records.size();
  const size_t k = std::min(params.n_clusters, n);
  std::vector<double> points(n * dim);
  for (size_t i = 0; i < n; ++i) {
    auto v = records[i].first->vector(records[i].second.index);
    std::copy(v.begin(), v.end(), points.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  auto point = [&](size_t i) { return points.data() + i * dim; };

  // k-means++ seeding.
  uint64_t rng = params.seed;
  std::vector<double> centroids;
  centroids.reserve(k * dim);
  const size_t first = static_cast<size_t>(internal::SplitMix64(rng) % n);
  centroids.insert(centroids.end(), point(first), point(first) + dim);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (size_t c = 1; c < k; ++c) {
    const double* last = centroids.data() + (c - 1) * dim;
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], SquaredDistance(point(i), last, dim));
      total += nearest[i];
    }
    size_t pick = 0;
    if (total > 0.0) {
      double target = internal::UniformUnit(rng) * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        target -= nearest[pick];
        if (target < 0.0) break;
      }
    }
    centroids.insert(centroids.end(), point(pick), point(pick) + dim);
  }

  // Lloyd iterations; ties go to the lower centroid index.
  std::vector<size_t> assign(n, k);
  for (size_t iter = 0; iter < params.max_iterations; ++iter) {
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (size_t c = 0; c < k; ++c) {
        const double d = SquaredDistance(point(i), centroids.data() + c * dim, dim);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> sums(k * dim, 0.0);
    std::vector<size_t> counts(k, 0);
    for (size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (size_t c = 0; c < dim; ++c) sums[assign[i] * dim + c] += point(i)[c];
    }
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (size_t j = 0; j < dim; ++j) {
        centroids[c * dim + j] = sums[c * dim + j] / static_cast<double>(counts[c]);
      }
    }
  }

  std::vector<Cluster> clusters(k);
  for (size_t c = 0; c < k; ++c) clusters[c].cluster_id = static_cast<uint32_t>(c);
  for (size_t i = 0; i < n; ++i) clusters[assign[i]].members.push_back(records[i].second);
  std::vector<Cluster> out;
  for (Cluster& cl : clusters) {
    if (cl.members.size() < params.min_size || cl.members.empty()) continue;
    cl.centroid.assign(dim, 0.0);
    for (const RecordRef& m : cl.members) {
      auto v = shards[m.shard].vector(m.index);
      for (size_t j = 0; j < dim; ++j) cl.centroid[j] += v[j];
    }
    for (double& x : cl.centroid) x /= static_cast<double>(cl.members.size());
    out.push_back(std::move(cl));
  }
  return out;
}

std::optional<Cluster> BallCluster(std::span<const double> probe, double radius, size_t min_size,
                                   std::span<const Shard> shards, uint32_t cluster_id) {
  if (!(radius > 0.0)) throw ParameterError("radius must be > 0");
  const uint32_t dim = CommonDim(shards);
  if (probe.size() != dim) throw DimensionError("probe length does not match store dim");
  Cluster cl;
  cl.cluster_id = cluster_id;
  cl.centroid.assign(dim, 0.0);
  for (size_t s = 0; s < shards.size(); ++s) {
    for (uint64_t i = 0; i < shards[s].size(); ++i) {
      if (!shards[s].has_delta(i)) continue;
      auto v = shards[s].vector(i);
      if (L2Distance(probe, v) > radius) continue;
      cl.members.push_back({static_cast<uint32_t>(s), i});
      for (size_t j = 0; j < dim; ++j) cl.centroid[j] += v[j];
    }
  }
  if (cl.members.empty() || cl.members.size() < min_size) return std::nullopt;
  for (double& x : cl.centroid) x /= static_cast<double>(cl.members.size());
  return cl;
}

ClusterSample SampleCluster(const Cluster& cluster, std::span<const Shard> shards) {
  ClusterSample s;
  s.dim = CommonDim(shards);
  s.centroid = cluster.centroid;
  for (const RecordRef& m : cluster.members) {
    const Shard& shard = shards[m.shard];
    if (!shard.has_delta(m.index)) throw ParameterError("cluster member without a delta");
    auto p = shard.vector(m.index);
    auto v = shard.delta(m.index);
    s.positions.insert(s.positions.end(), p.begin(), p.end());
    s.velocities.insert(s.velocities.end(), v.begin(), v.end());
  }
  return s;
}

double Divergence(const ClusterSample& sample) {
  const Radial rad = BuildRadial(sample);
  const size_t d = rad.dim;
  double sum = 0.0;
  for (size_t i = 0; i < rad.size(); ++i) {
    sum += Dot(rad.v.data() + i * d, rad.r.data() + i * d, d) / rad.r2[i];
  }
  return static_cast<double>(d) / static_cast<double>(rad.size()) * sum;
}

namespace {

std::vector<double> ExplicitMatrix(const Radial& rad) {
  const size_t d = rad.dim;
  std::vector<double> m(d * d, 0.0);
  for (size_t i = 0; i < rad.size(); ++i) {
    const double* r = rad.r.data() + i * d;
    const double* v = rad.v.data() + i * d;
    const double inv = 1.0 / rad.r2[i];
    for (size_t a = 0; a < d; ++a) {
      // Fill the upper triangle and mirror it, so M = -M^T holds exactly.
      for (size_t b = a + 1; b < d; ++b) m[a * d + b] += (r[a] * v[b] - v[a] * r[b]) * inv;
    }
  }
  const double scale = static_cast<double>(d) / static_cast<double>(rad.size());
  for (size_t a = 0; a < d; ++a) {
    for (size_t b = a + 1; b < d; ++b) {
      m[a * d + b] *= scale;
      m[b * d + a] = -m[a * d + b];
    }
  }
  return m;
}

double Frobenius(const std::vector<double>& m) {
  double s = 0.0;
  for (double x : m) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double CirculationExplicit(const ClusterSample& sample) {
  return Frobenius(ExplicitMatrix(BuildRadial(sample)));
}

double CirculationGram(const ClusterSample& sample) {
  const Radial rad = BuildRadial(sample);
  const size_t d = rad.dim;
  const size_t n = rad.size();
  // r ^ v only sees the part of v orthogonal to r, so use unit radial
  // directions a_i and tangential parts t_i = (v_i - (v_i . a_i) a_i) / |r_i|.
  // Radial components then cancel exactly instead of through rounding.
  std::vector<double> a(n * d), t(n * d);
  for (size_t i = 0; i < n; ++i) {
    const double norm = std::sqrt(rad.r2[i]);
    double* ai = a.data() + i * d;
    double* ti = t.data() + i * d;
    for (size_t c = 0; c < d; ++c) ai[c] = rad.r[i * d + c] / norm;
    const double along = Dot(rad.v.data() + i * d, ai, d);
    for (size_t c = 0; c < d; ++c) ti[c] = (rad.v[i * d + c] - along * ai[c]) / norm;
  }
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double* ai = a.data() + i * d;
    const double* ti = t.data() + i * d;
    sum += Dot(ai, ai, d) * Dot(ti, ti, d) - Dot(ai, ti, d) * Dot(ai, ti, d);
    for (size_t j = i + 1; j < n; ++j) {
      const double* aj = a.data() + j * d;
      const double* tj = t.data() + j * d;
      sum += 2.0 * (Dot(ai, aj, d) * Dot(ti, tj, d) - Dot(ai, tj, d) * Dot(aj, ti, d));
    }
  }
  const double dd = static_cast<double>(d), nn = static_cast<double>(n);
  // Rounding can leave a tiny negative sum when M is zero.
  return std::sqrt(std::max(0.0, 2.0 * dd * dd / (nn * nn) * sum));
}

AngularMomentum ComputeAngularMomentum(const ClusterSample& sample) {
  AngularMomentum out;
  if (sample.dim <= kMaxExplicitDim) {
    out.matrix = ExplicitMatrix(BuildRadial(sample));
    out.circulation = Frobenius(out.matrix);
  } else {
    out.circulation = CirculationGram(sample);
  }
  return out;
}

ClusterDiagnostics Diagnose(const Cluster& cluster, std::span<const Shard> shards,
                            size_t top_members) {
  const ClusterSample sample = SampleCluster(cluster, shards);
  ClusterDiagnostics diag;
  diag.cluster_id = cluster.cluster_id;
  diag.centroid = cluster.centroid;
  diag.member_refs = cluster.members;
  diag.size = BuildRadial(sample).size();
  diag.divergence = Divergence(sample);
  diag.circulation = ComputeAngularMomentum(sample).circulation;

  std::vector<std::pair<double, RecordRef>> by_distance;
  for (size_t i = 0; i < cluster.members.size(); ++i) {
    const double d2 = SquaredDistance(sample.positions.data() + i * sample.dim,
                                      sample.centroid.data(), sample.dim);
    by_distance.push_back({d2, cluster.members[i]});
  }
  std::sort(by_distance.begin(), by_distance.end());
  for (size_t i = 0; i < std::min(top_members, by_distance.size()); ++i) {
    diag.top_member_refs.push_back(by_distance[i].second);
  }
  return diag;
}

std::vector<ClusterDiagnostics> RankExtremes(std::vector<ClusterDiagnostics> clusters,
                                             RankBy by) {
  std::sort(clusters.begin(), clusters.end(),
            [by](const ClusterDiagnostics& a, const ClusterDiagnostics& b) {
              double ka = 0.0, kb = 0.0;
              switch (by) {
                case RankBy::kDivergenceMax: ka = -a.divergence; kb = -b.divergence; break;
                case RankBy::kDivergenceMin: ka = a.divergence; kb = b.divergence; break;
                case RankBy::kCirculationMax: ka = -a.circulation; kb = -b.circulation; break;
              }
              if (ka != kb) return ka < kb;
              return a.cluster_id < b.cluster_id;
            });
  return clusters;
}

}  // namespace cfield
