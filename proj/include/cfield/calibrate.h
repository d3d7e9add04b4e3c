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

// Held-out coverage check of the local per-coordinate Gaussian model.
//
// For each anchor the neighbor deltas are split into train and test sets.
// The IDW Gaussian is fitted on train; the standardized test residuals on the
// k largest-|anchor_i| coordinates are compared with the central normal
// quantiles at q = 0.50, 0.80, 0.95.

#ifndef CFIELD_CALIBRATE_H_
#define CFIELD_CALIBRATE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cfield/field.h"
#include "cfield/store.h"

namespace cfield {

// Standard normal CDF and quantile. NormalQuantile is accurate to ~1e-15 on
// (0, 1) and throws ParameterError outside it.
double NormalCdf(double x);
double NormalQuantile(double p);

inline constexpr std::array<double, 3> kCoverageLevels = {0.50, 0.80, 0.95};
inline constexpr std::array<double, 3> kCoverageTolerances = {0.05, 0.05, 0.03};

struct CalibrationOptions {
  double train_fraction = 0.7;
  uint64_t seed = 0;
  // Widen each tolerance by 1.96 binomial standard errors of its coverage
  // estimate ("within error bars" reading). Off by default.
  bool allow_sampling_error = false;
};

struct CoverageReport {
  std::array<double, 3> coverage = {0, 0, 0};  // c50, c80, c95
  std::array<double, 3> errors = {0, 0, 0};    // |c_q - q|
  bool passed = false;
  bool skipped = false;
  uint64_t n_train = 0;
  uint64_t n_test = 0;    // held-out deltas
  uint64_t n_values = 0;  // held-out deltas x selected coordinates
};

struct CalibrationSummary {
  uint64_t anchors_total = 0;
  uint64_t anchors_passed = 0;
  uint64_t anchors_skipped = 0;
  // Medians over non-skipped anchors; absent when every anchor was skipped.
  std::optional<std::array<double, 3>> median_errors;
  std::optional<std::array<double, 3>> median_coverage;
  std::vector<CoverageReport> reports;

  double pass_fraction() const {
    return anchors_total == 0 ? 0.0
                              : static_cast<double>(anchors_passed) /
                                    static_cast<double>(anchors_total);
  }
};

// `exclude` removes the anchor's own record when the anchor is a corpus
// point.
CoverageReport CalibrateAnchor(std::span<const double> anchor, const FieldParams& params,
                               const CalibrationOptions& options,
                               std::span<const Shard> shards,
                               std::optional<RecordRef> exclude = std::nullopt);

struct Anchor {
  std::vector<double> point;
  std::optional<RecordRef> self;
};

// Runs CalibrateAnchor for every anchor with the same split seed, so equal
// anchors give equal reports and evaluation order does not matter.
CalibrationSummary CalibrateCorpus(std::span<const Anchor> anchors, const FieldParams& params,
                                   const CalibrationOptions& options,
                                   std::span<const Shard> shards);

// Deterministic Fisher-Yates permutation of [0, n) driven by splitmix64.
std::vector<size_t> SeededPermutation(size_t n, uint64_t seed);

double Median(std::vector<double> values);

}  // namespace cfield

#endif  // CFIELD_CALIBRATE_H_
