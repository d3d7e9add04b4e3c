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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "testing/oracles.h"
#include "testing/synthetic.h"

namespace cfield {
namespace {

// Random orthogonal matrix by Gram-Schmidt on a Gaussian matrix.
std::vector<double> RandomRotation(std::mt19937_64& rng, size_t d) {
  std::normal_distribution<double> g;
  std::vector<double> q(d * d);
  for (double& x : q) x = g(rng);
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < i; ++j) {
      double dot = 0;
      for (size_t c = 0; c < d; ++c) dot += q[i * d + c] * q[j * d + c];
      for (size_t c = 0; c < d; ++c) q[i * d + c] -= dot * q[j * d + c];
    }
    double norm = 0;
    for (size_t c = 0; c < d; ++c) norm += q[i * d + c] * q[i * d + c];
    for (size_t c = 0; c < d; ++c) q[i * d + c] /= std::sqrt(norm);
  }
  return q;
}

std::vector<double> Apply(const std::vector<double>& q, const std::vector<double>& rows,
                          size_t d) {
  std::vector<double> out(rows.size(), 0.0);
  for (size_t r = 0; r < rows.size() / d; ++r) {
    for (size_t i = 0; i < d; ++i) {
      for (size_t c = 0; c < d; ++c) out[r * d + i] += q[i * d + c] * rows[r * d + c];
    }
  }
  return out;
}

TEST(DivergenceTest, RadialClusterGivesDimension) {
  std::mt19937_64 rng(1);
  for (size_t d : {1, 2, 3, 8, 50, 300}) {
    const auto s = testing::RadialCluster(rng, 40, d);
    EXPECT_NEAR(Divergence(s), static_cast<double>(d), 1e-9 * d) << d;
    const auto am = ComputeAngularMomentum(s);
    EXPECT_NEAR(am.circulation, 0.0, 1e-9);
  }
}

TEST(DivergenceTest, TangentialCircle) {
  const auto s = testing::TangentialCircle(24);
  EXPECT_NEAR(Divergence(s), 0.0, 1e-9);
  const auto am = ComputeAngularMomentum(s);
  ASSERT_EQ(am.matrix.size(), 4u);
  EXPECT_NEAR(am.matrix[0], 0.0, 1e-9);
  EXPECT_NEAR(am.matrix[1], 2.0, 1e-9);
  EXPECT_NEAR(am.matrix[2], -2.0, 1e-9);
  EXPECT_NEAR(am.matrix[3], 0.0, 1e-9);
  EXPECT_NEAR(am.circulation, 2.0 * std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(am.circulation, std::sqrt(2.0) * std::fabs(am.matrix[1]), 1e-12);
}

TEST(DivergenceTest, MatchesLoopOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const size_t d = 1 + rng() % 20;
    const auto s = testing::RandomCluster(rng, 2 + rng() % 60, d);
    const double want = testing::DivergenceLoop(s);
    EXPECT_NEAR(Divergence(s), want, 1e-12 * std::max(1.0, std::fabs(want)));
  }
}

TEST(DivergenceTest, CentroidMembersAreSkippedAndAllCentroidIsDegenerate) {
  ClusterSample s = testing::TangentialCircle(8);
  s.positions.insert(s.positions.end(), {0.0, 0.0});
  s.velocities.insert(s.velocities.end(), {5.0, 5.0});
  EXPECT_NEAR(ComputeAngularMomentum(s).circulation, 2.0 * std::sqrt(2.0), 1e-9);
  ClusterSample degenerate;
  degenerate.dim = 2;
  degenerate.centroid = {1, 1};
  degenerate.positions = {1, 1, 1, 1};
  degenerate.velocities = {1, 0, 0, 1};
  EXPECT_THROW(Divergence(degenerate), DegenerateClusterError);
  EXPECT_THROW(ComputeAngularMomentum(degenerate), DegenerateClusterError);
  EXPECT_THROW(CirculationGram(degenerate), DegenerateClusterError);
}

TEST(AngularMomentumTest, AntisymmetricOnRandomClusters) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const size_t d = 2 + rng() % 30;
    const auto s = testing::RandomCluster(rng, 2 + rng() % 50, d);
    const auto am = ComputeAngularMomentum(s);
    double scale = 0;
    for (double x : am.matrix) scale = std::max(scale, std::fabs(x));
    for (size_t a = 0; a < d; ++a) {
      for (size_t b = 0; b < d; ++b) {
        EXPECT_LE(std::fabs(am.matrix[a * d + b] + am.matrix[b * d + a]), 1e-12 * scale);
      }
    }
    const auto oracle = testing::ExplicitM(s);
    for (size_t i = 0; i < d * d; ++i) {
      EXPECT_NEAR(am.matrix[i], static_cast<double>(oracle[i]), 1e-12 * std::max(1.0, scale));
    }
    EXPECT_NEAR(am.circulation, testing::FrobeniusNorm(oracle), 1e-12 * am.circulation + 1e-15);
  }
}

TEST(AngularMomentumTest, GramIdentityMatchesExplicitMatrix) {
  std::mt19937_64 rng(4);
  for (size_t d = 1; d <= 8; ++d) {
    for (int t = 0; t < 10; ++t) {
      const auto s = testing::RandomCluster(rng, 3 + rng() % 40, d);
      const double explicit_norm = testing::FrobeniusNorm(testing::ExplicitM(s));
      EXPECT_NEAR(CirculationGram(s), explicit_norm, 1e-9 * std::max(1.0, explicit_norm));
      EXPECT_NEAR(CirculationExplicit(s), explicit_norm, 1e-9 * std::max(1.0, explicit_norm));
    }
  }
}

TEST(AngularMomentumTest, LargeDimensionUsesGramPath) {
  std::mt19937_64 rng(5);
  const auto s = testing::RandomCluster(rng, 30, 200);
  const auto am = ComputeAngularMomentum(s);
  EXPECT_TRUE(am.matrix.empty());
  const double explicit_norm = CirculationExplicit(s);
  EXPECT_NEAR(am.circulation, explicit_norm, 1e-9 * explicit_norm);
}

TEST(GeometryInvarianceTest, RotationAndJointScaling) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 40; ++t) {
    const size_t d = 2 + rng() % 7;
    const auto s = testing::RandomCluster(rng, 5 + rng() % 30, d);
    const double div = Divergence(s), circ = ComputeAngularMomentum(s).circulation;
    const auto q = RandomRotation(rng, d);
    ClusterSample r;
    r.dim = d;
    r.centroid = Apply(q, s.centroid, d);
    r.positions = Apply(q, s.positions, d);
    r.velocities = Apply(q, s.velocities, d);
    EXPECT_NEAR(Divergence(r), div, 1e-9 * std::max(1.0, std::fabs(div)));
    EXPECT_NEAR(ComputeAngularMomentum(r).circulation, circ, 1e-9 * std::max(1.0, circ));
    ClusterSample scaled = s;
    const double c = 0.01 + 10.0 * (rng() % 100) / 100.0;
    for (size_t i = 0; i < s.positions.size(); ++i) {
      scaled.positions[i] = s.centroid[i % d] + c * (s.positions[i] - s.centroid[i % d]);
      scaled.velocities[i] = c * s.velocities[i];
    }
    EXPECT_NEAR(Divergence(scaled), div, 1e-9 * std::max(1.0, std::fabs(div)));
    EXPECT_NEAR(ComputeAngularMomentum(scaled).circulation, circ, 1e-9 * std::max(1.0, circ));
  }
}

ClusterDiagnostics Diag(uint32_t id, double div, double circ) {
  ClusterDiagnostics d;
  d.cluster_id = id;
  d.divergence = div;
  d.circulation = circ;
  return d;
}

TEST(RankExtremesTest, OrdersBySignedStatisticWithIdTieBreak) {
  const std::vector<ClusterDiagnostics> in = {Diag(0, 0.0, 2.8), Diag(1, 2.0, 0.0),
                                              Diag(2, -3.0, 1.0), Diag(3, 2.0, 1.0)};
  auto ids = [](const std::vector<ClusterDiagnostics>& v) {
    std::vector<uint32_t> out;
    for (const auto& d : v) out.push_back(d.cluster_id);
    return out;
  };
  EXPECT_EQ(ids(RankExtremes(in, RankBy::kDivergenceMax)), (std::vector<uint32_t>{1, 3, 0, 2}));
  EXPECT_EQ(ids(RankExtremes(in, RankBy::kDivergenceMin)), (std::vector<uint32_t>{2, 0, 1, 3}));
  EXPECT_EQ(ids(RankExtremes(in, RankBy::kCirculationMax)), (std::vector<uint32_t>{0, 2, 3, 1}));
  // All-negative divergences keep their sign.
  const auto negative = RankExtremes({Diag(0, -5, 0), Diag(1, -1, 0)}, RankBy::kDivergenceMax);
  EXPECT_EQ(negative.front().divergence, -1.0);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    auto shuffled = in;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (RankBy by : {RankBy::kDivergenceMax, RankBy::kDivergenceMin, RankBy::kCirculationMax}) {
      EXPECT_EQ(ids(RankExtremes(shuffled, by)), ids(RankExtremes(in, by)));
    }
  }
}

// Stores each member as a two-step sequence (p, p + v).
std::vector<Shard> StoreFromSample(const ClusterSample& s, Shard* into = nullptr) {
  Shard shard(static_cast<uint32_t>(s.dim));
  Shard& target = into ? *into : shard;
  std::vector<float> flat(2 * s.dim);
  for (size_t i = 0; i < s.size(); ++i) {
    for (size_t c = 0; c < s.dim; ++c) {
      flat[c] = static_cast<float>(s.positions[i * s.dim + c]);
      flat[s.dim + c] = static_cast<float>(s.positions[i * s.dim + c] + s.velocities[i * s.dim + c]);
    }
    target.IngestFlat(flat, 2);
  }
  std::vector<Shard> out;
  if (!into) {
    shard.Seal();
    out.push_back(std::move(shard));
  }
  return out;
}

TEST(ClusteringTest, TwoSeparatedBlobsAreRecovered) {
  std::mt19937_64 rng(8);
  auto radial = testing::RadialCluster(rng, 100, 3);
  auto tangential = testing::RandomCluster(rng, 100, 3);
  for (size_t i = 0; i < tangential.positions.size(); ++i) tangential.positions[i] += 20.0;
  Shard shard(3);
  StoreFromSample(radial, &shard);
  StoreFromSample(tangential, &shard);
  shard.Seal();
  std::vector<Shard> store;
  store.push_back(std::move(shard));
  for (uint64_t seed : {0, 1, 2, 3}) {
    ClusterParams p;
    p.n_clusters = 2;
    p.seed = seed;
    const auto clusters = FindDenseClusters(store, p);
    ASSERT_EQ(clusters.size(), 2u);
    size_t agree = 0;
    for (const Cluster& c : clusters) {
      size_t first_blob = 0;
      for (const RecordRef& r : c.members) {
        EXPECT_TRUE(store[0].has_delta(r.index));
        first_blob += store[0].seq_id(r.index) < 100 ? 1 : 0;
      }
      agree += std::max(first_blob, c.members.size() - first_blob);
    }
    EXPECT_GE(agree, 198u);
    EXPECT_EQ(FindDenseClusters(store, p).front().members, clusters.front().members);
  }
}

TEST(ClusteringTest, SingleBlobCentroidNearMeanAndOversizeIsEmpty) {
  std::mt19937_64 rng(9);
  const auto blob = testing::RandomCluster(rng, 400, 4);
  const auto store = StoreFromSample(blob);
  ClusterParams p;
  p.n_clusters = 1;
  const auto clusters = FindDenseClusters(store, p);
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].members.size(), 400u);
  for (size_t c = 0; c < 4; ++c) {
    EXPECT_LE(std::fabs(clusters[0].centroid[c] - blob.centroid[c]), 3.0 / std::sqrt(400.0));
  }
  p.min_size = 401;
  EXPECT_TRUE(FindDenseClusters(store, p).empty());
}

TEST(ClusteringTest, BallClusterAndDiagnose) {
  const auto circle = testing::TangentialCircle(16);
  const auto store = StoreFromSample(circle);
  const std::vector<double> probe = {0, 0};
  EXPECT_FALSE(BallCluster(probe, 0.5, 2, store).has_value());
  const auto ball = BallCluster(probe, 1.01, 2, store, 7);
  ASSERT_TRUE(ball.has_value());
  EXPECT_EQ(ball->members.size(), 16u);
  const auto diag = Diagnose(*ball, store, 3);
  EXPECT_EQ(diag.cluster_id, 7u);
  EXPECT_EQ(diag.size, 16u);
  EXPECT_EQ(diag.top_member_refs.size(), 3u);
  EXPECT_NEAR(diag.divergence, 0.0, 1e-6);
  EXPECT_NEAR(diag.circulation, 2.0 * std::sqrt(2.0), 1e-6);
}

}  // namespace
}  // namespace cfield
