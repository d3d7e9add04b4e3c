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

#include "cfield/triage.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace cfield {

const char* TriageModeName(TriageMode mode) {
  return mode == TriageMode::kHallucination ? "hallucination" : "novelty";
}

const char* TriageLabelName(TriageLabel label) {
  switch (label) {
    case TriageLabel::kPositive: return "Positive";
    case TriageLabel::kNegative: return "Negative";
    case TriageLabel::kUnsure: return "Unsure";
    case TriageLabel::kRejected: return "Rejected";
  }
  return "Unknown";
}

void TriageParams::Validate() const {
  if (!(zeta_low >= 0.0)) throw ParameterError("zeta_low must be >= 0");
  if (!(zeta_low <= zeta_high)) throw ParameterError("zeta_low must not exceed zeta_high");
}

PairScore ScorePair(std::span<const double> s1, std::span<const double> s2,
                    const FieldParams& params, std::span<const Shard> shards) {
  if (s1.size() != s2.size()) throw DimensionError("s1 and s2 differ in length");
  PairScore score;
  const LocalField field = EstimateField(s1, params, shards);
  score.status = field.status;
  score.evidence = field.neighbors;
  if (field.defined()) {
    std::vector<double> delta(s1.size());
    for (size_t i = 0; i < s1.size(); ++i) delta[i] = s2[i] - s1[i];
    score.zeta = Zeta(std::span<const double>(delta), field, EffectiveK(params, s1.size()));
  }
  return score;
}

ReferenceScore ScoreReference(std::span<const double> s1, const FieldParams& params,
                              std::span<const Shard> shards) {
  ReferenceScore ref;
  SearchOptions options;
  options.filter = [](const Shard& shard, RecordRef r) { return shard.has_delta(r.index); };
  const std::vector<Neighbor> nearest = Search(s1, 1, options, shards);
  if (nearest.empty()) return ref;
  const RecordRef record = nearest.front().ref;
  ref.record = record;
  const Shard& shard = shards[record.shard];
  const LocalField field = EstimateField(shard.vector(record.index), params, shards, record);
  ref.status = field.status;
  if (field.defined()) {
    ref.zeta = Zeta(shard.delta(record.index), field, EffectiveK(params, shard.dim()));
  }
  return ref;
}

TriageLabel Classify(std::optional<double> zeta_test, std::optional<double> zeta_ref,
                     FieldStatus status_test, const TriageParams& params) {
  params.Validate();
  if (status_test != FieldStatus::kDefined || !zeta_test) {
    return params.mode == TriageMode::kNovelty ? TriageLabel::kPositive : TriageLabel::kUnsure;
  }
  if (zeta_ref && *zeta_ref > params.zeta_high) return TriageLabel::kRejected;
  if (*zeta_test > params.zeta_high) return TriageLabel::kPositive;
  const bool ref_low = !zeta_ref || *zeta_ref < params.zeta_low;
  if (*zeta_test < params.zeta_low && ref_low) return TriageLabel::kNegative;
  return TriageLabel::kUnsure;
}

TriageOutcome Triage(std::span<const double> s1, std::span<const double> s2,
                     const FieldParams& field_params, const TriageParams& params,
                     std::span<const Shard> shards) {
  TriageOutcome outcome;
  const PairScore test = ScorePair(s1, s2, field_params, shards);
  outcome.zeta_test = test.zeta;
  outcome.status_test = test.status;
  for (const Neighbor& n : test.evidence) outcome.evidence.push_back(n.ref);
  const ReferenceScore ref = ScoreReference(s1, field_params, shards);
  outcome.reference = ref.record;
  outcome.zeta_ref = ref.zeta;
  outcome.label = Classify(outcome.zeta_test, outcome.zeta_ref, outcome.status_test, params);
  return outcome;
}

std::optional<double> ConfusionCounts::coverage() const {
  const uint64_t denom = covered() + unsure;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(covered()) / static_cast<double>(denom);
}

std::optional<double> ConfusionCounts::risk() const {
  if (covered() == 0) return std::nullopt;
  return static_cast<double>(fp + fn) / static_cast<double>(covered());
}

ConfusionCounts Tally(std::span<const ScoredExample> examples, const TriageParams& params) {
  ConfusionCounts counts;
  for (const ScoredExample& ex : examples) {
    if (!ex.truth_positive) continue;
    const bool truth = *ex.truth_positive;
    switch (Classify(ex.zeta_test, ex.zeta_ref, ex.status_test, params)) {
      case TriageLabel::kPositive: ++(truth ? counts.tp : counts.fp); break;
      case TriageLabel::kNegative: ++(truth ? counts.fn : counts.tn); break;
      case TriageLabel::kUnsure: ++counts.unsure; break;
      case TriageLabel::kRejected: ++counts.rejected; break;
    }
  }
  return counts;
}

MetricsReport MetricsFromCounts(const ConfusionCounts& c) {
  MetricsReport m;
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  if (c.tp + c.fp > 0) m.precision = tp / (tp + fp);
  if (c.tp + c.fn > 0) m.recall = tp / (tp + fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom > 0.0) m.mcc = (tp * tn - fp * fn) / std::sqrt(denom);
  m.coverage = c.coverage();
  return m;
}

std::optional<double> RocAuc(std::span<const double> scores, std::span<const uint8_t> positive) {
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // Average 1-based ranks over tie groups.
  double rank_sum_pos = 0.0;
  uint64_t n_pos = 0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t t = i; t < j; ++t) {
      if (positive[order[t]]) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

MetricsReport ComputeMetrics(std::span<const ScoredExample> examples,
                             const TriageParams& params) {
  MetricsReport report = MetricsFromCounts(Tally(examples, params));
  constexpr double kProbFloor = 1e-6;
  std::vector<double> scores;
  std::vector<uint8_t> truth_flags;
  double loss = 0.0;
  for (const ScoredExample& ex : examples) {
    if (!ex.truth_positive) continue;
    const TriageLabel label = Classify(ex.zeta_test, ex.zeta_ref, ex.status_test, params);
    if (label != TriageLabel::kPositive && label != TriageLabel::kNegative) continue;
    const double score = ex.zeta_test && ex.status_test == FieldStatus::kDefined
                             ? *ex.zeta_test
                             : std::numeric_limits<double>::infinity();
    scores.push_back(score);
    truth_flags.push_back(*ex.truth_positive ? 1 : 0);
    const double prob = params.zeta_high > 0.0
                            ? std::clamp(score / params.zeta_high, kProbFloor, 1.0 - kProbFloor)
                            : (score > 0.0 ? 1.0 - kProbFloor : kProbFloor);
    loss -= *ex.truth_positive ? std::log(prob) : std::log1p(-prob);
  }
  if (!scores.empty()) {
    report.log_loss = loss / static_cast<double>(scores.size());
    report.auc = RocAuc(scores, truth_flags);
  }
  return report;
}

std::vector<ThresholdPair> DefaultSweepGrid() {
  std::vector<ThresholdPair> grid;
  for (int lo = 0; lo <= 8; ++lo) {
    for (int hi = 4; hi <= 20; ++hi) {
      const double low = 0.25 * lo, high = 0.25 * hi;
      if (low <= high) grid.push_back({low, high});
    }
  }
  return grid;
}

SweepResult ThresholdSweep(std::span<const ScoredExample> examples,
                           std::span<const ThresholdPair> grid, TriageMode mode) {
  if (grid.empty()) throw ParameterError("threshold grid is empty");
  SweepResult result;
  for (const ThresholdPair& t : grid) {
    TriageParams params{t.low, t.high, mode};
    params.Validate();
    SweepCell cell;
    cell.thresholds = t;
    cell.counts = Tally(examples, params);
    const MetricsReport m = MetricsFromCounts(cell.counts);
    cell.f1 = m.f1;
    cell.coverage = cell.counts.coverage();
    cell.risk = cell.counts.risk();
    result.cells.push_back(cell);
  }
  result.aurc = Aurc(result.cells);
  return result;
}

std::optional<double> Aurc(std::span<const SweepCell> cells) {
  // Lowest risk seen at each coverage value.
  std::map<double, double> best;
  for (const SweepCell& c : cells) {
    if (!c.risk || !c.coverage) continue;
    auto [it, inserted] = best.emplace(*c.coverage, *c.risk);
    if (!inserted) it->second = std::min(it->second, *c.risk);
  }
  if (best.empty()) return std::nullopt;
  std::vector<double> coverage, envelope;
  double running = std::numeric_limits<double>::infinity();
  for (auto it = best.rbegin(); it != best.rend(); ++it) {
    running = std::min(running, it->second);
    coverage.push_back(it->first);
    envelope.push_back(running);
  }
  std::reverse(coverage.begin(), coverage.end());
  std::reverse(envelope.begin(), envelope.end());
  if (coverage.size() == 1) return envelope.front();
  double area = 0.0;
  for (size_t i = 1; i < coverage.size(); ++i) {
    area += 0.5 * (envelope[i] + envelope[i - 1]) * (coverage[i] - coverage[i - 1]);
  }
  return area / (coverage.back() - coverage.front());
}

const char* BaselineMethodName(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::kVsdbTop1L2: return "vsdb-top1-l2";
    case BaselineMethod::kVsdbTop1Cos: return "vsdb-top1-cos";
    case BaselineMethod::kVdbPairCos: return "vdb-pair-cos";
  }
  return "unknown";
}

BaselineScorer::BaselineScorer(std::span<const Shard> shards) : shards_(shards) {
  if (shards.empty()) return;
  const uint32_t dim = CommonDim(shards);
  std::vector<float> pair(2 * static_cast<size_t>(dim));
  for (const Shard& shard : shards) {
    Shard pairs(2 * dim);
    for (uint64_t i = 0; i < shard.size(); ++i) {
      if (!shard.has_delta(i)) continue;
      auto v = shard.vector(i);
      auto next = shard.vector(i + 1);
      std::copy(v.begin(), v.end(), pair.begin());
      std::copy(next.begin(), next.end(), pair.begin() + dim);
      pairs.IngestFlat(pair, 1);
    }
    pairs.Seal();
    pair_store_.push_back(std::move(pairs));
  }
}

double BaselineScorer::Score(std::span<const double> s1, std::span<const double> s2,
                             BaselineMethod method) const {
  if (s1.size() != s2.size()) throw DimensionError("s1 and s2 differ in length");
  if (method == BaselineMethod::kVdbPairCos) {
    std::vector<double> query(s1.begin(), s1.end());
    query.insert(query.end(), s2.begin(), s2.end());
    SearchOptions options;
    options.metric = Metric::kCosine;
    const std::vector<Neighbor> nearest = Search(query, 1, options, pair_store_);
    if (nearest.empty()) throw StoreEmptyError("store holds no consecutive pairs");
    return nearest.front().distance;
  }
  SearchOptions options;
  options.filter = [](const Shard& shard, RecordRef r) { return shard.has_delta(r.index); };
  const std::vector<Neighbor> nearest = Search(s1, 1, options, shards_);
  if (nearest.empty()) throw StoreEmptyError("store holds no record with a delta");
  const RecordRef ref = nearest.front().ref;
  auto stored = shards_[ref.shard].delta(ref.index);
  std::vector<double> delta(s1.size());
  for (size_t i = 0; i < s1.size(); ++i) delta[i] = s2[i] - s1[i];
  return method == BaselineMethod::kVsdbTop1L2
             ? L2Distance(std::span<const double>(delta), stored)
             : CosineDistance(std::span<const double>(delta), stored);
}

}  // namespace cfield
