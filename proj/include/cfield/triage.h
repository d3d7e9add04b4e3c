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

// Three-way triage of sentence-pair transitions and selective
// classification metrics.
//
// A pair (s1, s2) is scored by zeta of s2 - s1 against the field at s1. The
// nearest stored transition to s1 provides a reference zeta; a reference
// above zeta_high marks the region as too noisy and the example is
// rejected. Otherwise zeta_test > zeta_high is Positive (ungrounded / novel),
// both scores below zeta_low is Negative, and everything else is Unsure.

#ifndef CFIELD_TRIAGE_H_
#define CFIELD_TRIAGE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cfield/field.h"
#include "cfield/index.h"
#include "cfield/store.h"

namespace cfield {

enum class TriageMode { kHallucination, kNovelty };
enum class TriageLabel { kPositive, kNegative, kUnsure, kRejected };

const char* TriageModeName(TriageMode mode);
const char* TriageLabelName(TriageLabel label);

struct TriageParams {
  double zeta_low = 1.0;
  double zeta_high = 3.0;
  TriageMode mode = TriageMode::kHallucination;

  void Validate() const;
};

struct PairScore {
  std::optional<double> zeta;  // absent unless the field at s1 is Defined
  FieldStatus status = FieldStatus::kOutOfCorpus;
  std::vector<Neighbor> evidence;  // records supporting the field at s1
};

PairScore ScorePair(std::span<const double> s1, std::span<const double> s2,
                    const FieldParams& params, std::span<const Shard> shards);

struct ReferenceScore {
  std::optional<RecordRef> record;  // nearest stored transition to s1
  std::optional<double> zeta;       // its delta against the field at its own vector
  FieldStatus status = FieldStatus::kOutOfCorpus;
};

// The self record is excluded from its own field estimate.
ReferenceScore ScoreReference(std::span<const double> s1, const FieldParams& params,
                              std::span<const Shard> shards);

// An absent zeta_ref disables the reference gate (no rejection, and the
// Negative rule only looks at zeta_test).
TriageLabel Classify(std::optional<double> zeta_test, std::optional<double> zeta_ref,
                     FieldStatus status_test, const TriageParams& params);

struct TriageOutcome {
  TriageLabel label = TriageLabel::kUnsure;
  std::optional<double> zeta_test;
  std::optional<double> zeta_ref;
  FieldStatus status_test = FieldStatus::kOutOfCorpus;
  std::optional<RecordRef> reference;
  std::vector<RecordRef> evidence;
};

TriageOutcome Triage(std::span<const double> s1, std::span<const double> s2,
                     const FieldParams& field_params, const TriageParams& params,
                     std::span<const Shard> shards);

// An example prepared for metric computation. `truth_positive` is the
// ground-truth label (Positive = ungrounded / novel) when known.
struct ScoredExample {
  std::optional<double> zeta_test;
  std::optional<double> zeta_ref;
  FieldStatus status_test = FieldStatus::kDefined;
  std::optional<bool> truth_positive;
};

struct ConfusionCounts {
  uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  uint64_t unsure = 0;
  uint64_t rejected = 0;

  uint64_t covered() const { return tp + tn + fp + fn; }
  // covered / (covered + unsure); rejected examples count in neither.
  std::optional<double> coverage() const;
  // (fp + fn) / covered.
  std::optional<double> risk() const;
};

// Examples without a ground-truth label are skipped.
ConfusionCounts Tally(std::span<const ScoredExample> examples, const TriageParams& params);

struct MetricsReport {
  std::optional<double> precision, recall, f1, mcc, auc, log_loss, coverage;
};

// Ratio metrics straight from the confusion table; undefined ratios stay
// absent.
MetricsReport MetricsFromCounts(const ConfusionCounts& counts);

// Full report. AUC ranks covered examples by zeta_test (an absent zeta on a
// Positive, i.e. out of corpus in novelty mode, ranks above every finite
// score). LogLoss maps zeta to p(positive) = clamp(zeta / zeta_high, 1e-6,
// 1 - 1e-6).
MetricsReport ComputeMetrics(std::span<const ScoredExample> examples,
                             const TriageParams& params);

// Mann-Whitney AUC with half credit for ties; absent unless both classes
// occur.
std::optional<double> RocAuc(std::span<const double> scores, std::span<const uint8_t> positive);

struct ThresholdPair {
  double low = 0.0;
  double high = 0.0;
};

struct SweepCell {
  ThresholdPair thresholds;
  ConfusionCounts counts;
  std::optional<double> f1;
  std::optional<double> coverage;
  std::optional<double> risk;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::optional<double> aurc;
};

// zeta_low in {0, 0.25, ..., 2.0} x zeta_high in {1.0, 1.25, ..., 5.0},
// keeping low <= high.
std::vector<ThresholdPair> DefaultSweepGrid();

SweepResult ThresholdSweep(std::span<const ScoredExample> examples,
                           std::span<const ThresholdPair> grid, TriageMode mode);

// Area under the risk-coverage curve. For each distinct coverage c the
// envelope takes the lowest risk among cells whose coverage is at least c;
// the envelope is integrated by trapezoid over the sorted coverage values
// and divided by the coverage span. A single point yields its own risk.
// Absent when no cell covers any example.
std::optional<double> Aurc(std::span<const SweepCell> cells);

enum class BaselineMethod { kVsdbTop1L2, kVsdbTop1Cos, kVdbPairCos };

const char* BaselineMethodName(BaselineMethod method);

// Non-field comparison scores. The pair-store baseline needs every
// [vector; next vector] concatenation, built once at construction.
class BaselineScorer {
 public:
  explicit BaselineScorer(std::span<const Shard> shards);

  // Throws StoreEmptyError when no stored record has a delta.
  double Score(std::span<const double> s1, std::span<const double> s2,
               BaselineMethod method) const;

 private:
  std::span<const Shard> shards_;
  std::vector<Shard> pair_store_;
};

}  // namespace cfield

#endif  // CFIELD_TRIAGE_H_
