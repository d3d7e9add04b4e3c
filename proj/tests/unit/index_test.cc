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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cfield/ballistics.h"
#include "testing/oracles.h"
#include "testing/synthetic.h"

namespace cfield {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Shard> OneDimStore(std::initializer_list<float> values) {
  Shard shard(1);
  for (float v : values) {
    const std::vector<std::vector<float>> seq = {{v}};
    shard.IngestSequence(seq);
  }
  shard.Seal();
  std::vector<Shard> out;
  out.push_back(std::move(shard));
  return out;
}

void ExpectSameNeighbors(const std::vector<Neighbor>& got, const std::vector<Neighbor>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].ref, want[i].ref) << "rank " << i;
    EXPECT_NEAR(got[i].distance, want[i].distance, 1e-9 * (1.0 + want[i].distance));
  }
}

TEST(DistanceTest, CosineOfZeroVectorIsMaximal) {
  const std::vector<float> z = {0, 0}, a = {1, 0}, b = {-1, 0};
  EXPECT_EQ(CosineDistance(std::span<const float>(z), a), 2.0);
  EXPECT_NEAR(CosineDistance(std::span<const float>(a), b), 2.0, 1e-15);
  EXPECT_NEAR(CosineDistance(std::span<const float>(a), a), 0.0, 1e-15);
  EXPECT_NEAR(L2Distance(std::span<const float>(a), b), 2.0, 1e-15);
}

TEST(KnnTest, OneDimensionalExample) {
  const auto store = OneDimStore({0, 1, 3});
  const std::vector<double> q = {0.9};
  const auto hits = Knn(std::span<const double>(q), 2, Metric::kL2, store);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].ref.index, 1u);
  EXPECT_NEAR(hits[0].distance, 0.1, 1e-7);
  EXPECT_EQ(hits[1].ref.index, 0u);
  EXPECT_NEAR(hits[1].distance, 0.9, 1e-7);
}

TEST(KnnTest, SelfMatchComesFirstAtZero) {
  std::mt19937_64 rng(1);
  const auto store = testing::RandomShards(rng, 2, 300, 8);
  const auto v = store[1].vector(17);
  const auto hits = Knn(v, 3, Metric::kL2, store);
  EXPECT_EQ(hits[0].ref, (RecordRef{1, 17}));
  EXPECT_EQ(hits[0].distance, 0.0);
}

TEST(KnnTest, LargeKReturnsEverythingSorted) {
  const auto store = OneDimStore({5, -1, 2, 2});
  const std::vector<double> q = {2.0};
  const auto hits = Knn(std::span<const double>(q), 100, Metric::kL2, store);
  ASSERT_EQ(hits.size(), 4u);
  EXPECT_EQ(hits[0].ref.index, 2u);  // tie at 0 broken by index
  EXPECT_EQ(hits[1].ref.index, 3u);
  for (size_t i = 1; i < hits.size(); ++i) EXPECT_FALSE(NeighborLess(hits[i], hits[i - 1]));
}

TEST(KnnTest, RejectsBadArguments) {
  const auto store = OneDimStore({1});
  const std::vector<double> q = {0.0}, q2 = {0.0, 1.0};
  EXPECT_THROW(Knn(std::span<const double>(q), 0, Metric::kL2, store), ParameterError);
  EXPECT_THROW(Knn(std::span<const double>(q2), 1, Metric::kL2, store), DimensionError);
  EXPECT_THROW(KnnWithin(std::span<const float>(std::vector<float>{0.0f}), 1, 0.0, Metric::kL2,
                         store),
               ParameterError);
  EXPECT_TRUE(Knn(std::span<const double>(q), 3, Metric::kL2, std::span<const Shard>()).empty());
}

TEST(KnnWithinTest, FarNeighborsGiveEmptyAndInfinityIsIdentity) {
  std::mt19937_64 rng(2);
  const auto store = testing::RandomShards(rng, 2, 400, 3);
  const std::vector<float> far = {10, 10, 10};
  EXPECT_TRUE(KnnWithin(far, 5, 1.0, Metric::kL2, store).empty());
  const std::vector<float> q = {0.1f, -0.2f, 0.3f};
  ExpectSameNeighbors(KnnWithin(q, 7, kInf, Metric::kL2, store), Knn(q, 7, Metric::kL2, store));
  ExpectSameNeighbors(KnnWithin(q, 7, kInf, Metric::kCosine, store),
                      Knn(q, 7, Metric::kCosine, store));
}

TEST(KnnWithinTest, MatchesFilteredFullScan) {
  std::mt19937_64 rng(4);
  const auto store = testing::RandomShards(rng, 3, 2000, 4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> q(4);
    for (double& x : q) x = u(rng);
    SearchOptions opt;
    opt.d_max = 0.4;
    ExpectSameNeighbors(Search(q, 25, opt, store),
                        testing::FullScanKnn(q, 25, Metric::kL2, store, 0.4));
  }
}

TEST(KnnWithinTest, OutsideBallisticsEnvelopeIsEmpty) {
  BallisticsParams p;
  p.n_trajectories = 200;
  const auto corpus = BuildBallisticsCorpus(p);
  // The envelope is y = 1 - x^2 / 4; (1.8, 0.9) lies well above it.
  const std::vector<float> q = {1.8f, 0.9f};
  EXPECT_TRUE(KnnWithin(q, 10, 0.03, Metric::kL2, corpus).empty());
  EXPECT_TRUE(testing::FullScanKnn(std::vector<double>{1.8, 0.9}, 10, Metric::kL2, corpus, 0.03)
                  .empty());
}

TEST(KnnPropertyTest, MatchesFullScanOnRandomStores) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const uint32_t dim = std::vector<uint32_t>{2, 16, 64}[trial % 3];
    const size_t n = 50 + rng() % 3000;
    const auto store = testing::RandomShards(rng, 1 + rng() % 4, n, dim);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> q(dim);
    for (double& x : q) x = u(rng);
    const size_t k = 1 + rng() % 40;
    for (Metric m : {Metric::kL2, Metric::kCosine}) {
      ExpectSameNeighbors(Knn(std::span<const double>(q), k, m, store),
                          testing::FullScanKnn(q, k, m, store));
    }
  }
}

TEST(KnnPropertyTest, ShardedEqualsConcatenated) {
  std::mt19937_64 rng(8);
  const auto store = testing::RandomShards(rng, 5, 3000, 6);
  std::vector<Shard> single;
  single.push_back(testing::Concatenate(store));
  // Map (shard, index) to the concatenated index.
  std::vector<uint64_t> offset = {0};
  for (const Shard& s : store) offset.push_back(offset.back() + s.size());
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> q(6);
    for (double& x : q) x = u(rng);
    for (Metric m : {Metric::kL2, Metric::kCosine}) {
      const auto a = Knn(std::span<const double>(q), 15, m, store);
      const auto b = Knn(std::span<const double>(q), 15, m, single);
      ASSERT_EQ(a.size(), b.size());
      for (size_t i = 0; i < a.size(); ++i) {
        const auto v1 = store[a[i].ref.shard].vector(a[i].ref.index);
        const auto v2 = single[0].vector(b[i].ref.index);
        EXPECT_TRUE(std::equal(v1.begin(), v1.end(), v2.begin()));
        EXPECT_EQ(a[i].distance, b[i].distance);
      }
    }
  }
}

TEST(KnnPropertyTest, RepeatedCallsAreIdentical) {
  std::mt19937_64 rng(10);
  const auto store = testing::RandomShards(rng, 3, 5000, 12);
  const std::vector<double> q(12, 0.1);
  const auto a = Knn(std::span<const double>(q), 50, Metric::kCosine, store);
  for (int i = 0; i < 3; ++i) {
    const auto b = Knn(std::span<const double>(q), 50, Metric::kCosine, store);
    ASSERT_EQ(a.size(), b.size());
    for (size_t j = 0; j < a.size(); ++j) {
      EXPECT_EQ(a[j].ref, b[j].ref);
      EXPECT_EQ(a[j].distance, b[j].distance);
    }
  }
}

TEST(MergeTest, MergeOfPerShardListsEqualsGlobalSort) {
  std::vector<std::vector<Neighbor>> lists = {
      {{{0, 1}, 0.5}, {{0, 2}, 0.7}}, {{{1, 0}, 0.5}, {{1, 3}, 0.1}}};
  const auto merged = MergeNeighbors(lists, 3);
  ASSERT_EQ(merged.size(), 3u);
  EXPECT_EQ(merged[0].ref, (RecordRef{1, 3}));
  EXPECT_EQ(merged[1].ref, (RecordRef{0, 1}));
  EXPECT_EQ(merged[2].ref, (RecordRef{1, 0}));
}

using Seq = std::vector<std::vector<float>>;

TEST(ChamferTest, MatchesDoubleLoopAndIsSymmetric) {
  std::mt19937_64 rng(6);
  std::normal_distribution<float> g;
  for (int t = 0; t < 20; ++t) {
    Seq a(1 + rng() % 6, std::vector<float>(5)), b(1 + rng() % 6, std::vector<float>(5));
    for (auto& v : a) for (float& x : v) x = g(rng);
    for (auto& v : b) for (float& x : v) x = g(rng);
    EXPECT_NEAR(ChamferDistance(a, b), testing::ChamferLoop(a, b), 1e-12);
    EXPECT_EQ(ChamferDistance(a, b), ChamferDistance(b, a));
  }
  Seq a = {{1, 0}, {0, 1}};
  Seq scaled = {{0, 2}, {3, 0}, {0, 5}};
  EXPECT_NEAR(ChamferDistance(a, scaled), 0.0, 1e-15);
}

TEST(ChamferRerankTest, IdenticalCandidateRanksFirstWithZero) {
  Shard shard(3);
  const Seq q = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const Seq other = {{1, 1, 0}, {0, 1, 1}};
  shard.IngestSequence(other);
  shard.IngestSequence(q);
  shard.Seal();
  std::vector<Shard> store;
  store.push_back(std::move(shard));
  const std::vector<SequenceRef> cands = {{0, 0}, {0, 1}};
  const auto ranked = ChamferRerank(q, cands, store, 1);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].sequence, (SequenceRef{0, 1}));
  EXPECT_NEAR(ranked[0].chamfer, 0.0, 1e-15);
}

TEST(ChamferRerankTest, FrequencyDominatesChamfer) {
  // Query of 4 unit axes in 4-d. Candidate A repeats 3 of them exactly,
  // candidate B only one, but B's remaining vectors sit close to the query.
  const Seq q = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
  const Seq a = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {-1, -1, -1, 0}};
  const Seq b = {{0, 0, 0, 1}, {0.9f, 0.1f, 0, 0}, {0.1f, 0.9f, 0.1f, 0}};
  Shard shard(4);
  shard.IngestSequence(b);
  shard.IngestSequence(a);
  shard.Seal();
  std::vector<Shard> store;
  store.push_back(std::move(shard));
  const std::vector<SequenceRef> cands = {{0, 0}, {0, 1}};
  const auto ranked = ChamferRerank(q, cands, store, 1);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].sequence, (SequenceRef{0, 1}));
  EXPECT_EQ(ranked[0].frequency, 3u);
  EXPECT_EQ(ranked[1].frequency, 1u);
}

TEST(ChamferRerankTest, SingleCandidateScoreMatchesOracle) {
  const Seq q = {{1, 2}, {-1, 0.5f}};
  const Seq c = {{0.3f, 1}, {2, -1}, {-0.5f, -0.5f}};
  Shard shard(2);
  shard.IngestSequence(c);
  shard.Seal();
  std::vector<Shard> store;
  store.push_back(std::move(shard));
  const std::vector<SequenceRef> cands = {{0, 0}};
  const auto ranked = ChamferRerank(q, cands, store);
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_NEAR(ranked[0].chamfer, testing::ChamferLoop(q, c), 1e-12);
}

}  // namespace
}  // namespace cfield
