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

// Local drift field estimation and the standardized deviation score.
//
// At an anchor point the field is a per-coordinate Gaussian over the deltas
// of nearby stored records. Neighbors are weighted by (d + epsilon)^-p and
// the deviation is floored at sigma_min. A candidate delta is scored by the
// mean absolute z-distance over the k coordinates where the field mean has
// the largest magnitude.

#ifndef CFIELD_FIELD_H_
#define CFIELD_FIELD_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cfield/index.h"
#include "cfield/status.h"
#include "cfield/store.h"

namespace cfield {

struct FieldParams {
  size_t top_n = 10;
  double d_max = 0.3;
  double p = 1.0;
  double epsilon = 1e-8;
  double sigma_min = 1e-6;
  // Coordinates compared by the score. Values above the embedding dimension
  // select every coordinate.
  size_t top_n_zeta = 50;
  size_t min_support = 2;

  // Throws ParameterError on the first violated bound.
  void Validate() const;
};

enum class FieldStatus { kDefined, kOutOfCorpus, kInsufficientStatistics };

const char* FieldStatusName(FieldStatus status);

class FieldUndefinedError : public Error {
 public:
  explicit FieldUndefinedError(FieldStatus status)
      : Error(ErrorCode::kFieldUndefined,
              std::string("field is undefined: ") + FieldStatusName(status)),
        status_(status) {}
  FieldStatus status() const { return status_; }

 private:
  FieldStatus status_;
};

struct LocalField {
  FieldStatus status = FieldStatus::kOutOfCorpus;
  std::vector<double> mu;           // empty unless Defined
  std::vector<double> sigma_tilde;  // empty unless Defined
  size_t support = 0;
  // Contributing records and their normalized weights, nearest first.
  std::vector<Neighbor> neighbors;
  std::vector<double> weights;

  bool defined() const { return status == FieldStatus::kDefined; }
};

// The k used for a given dimension: min(top_n_zeta, dim).
size_t EffectiveK(const FieldParams& params, size_t dim);

// Up to top_n nearest records within d_max that carry a delta, optionally
// excluding one record (the anchor itself when it is a corpus point).
std::vector<Neighbor> CollectDeltaNeighbors(std::span<const double> anchor,
                                            const FieldParams& params,
                                            std::span<const Shard> shards,
                                            std::optional<RecordRef> exclude = std::nullopt);

// Normalized IDW weights (d + epsilon)^-p for the given neighbor distances.
std::vector<double> IdwWeights(std::span<const Neighbor> neighbors, double p, double epsilon);

LocalField EstimateField(std::span<const double> anchor, const FieldParams& params,
                         std::span<const Shard> shards,
                         std::optional<RecordRef> exclude = std::nullopt);
LocalField EstimateField(std::span<const float> anchor, const FieldParams& params,
                         std::span<const Shard> shards,
                         std::optional<RecordRef> exclude = std::nullopt);

// Indices of the k largest |values[i]|, ties by ascending index, returned in
// selection order.
std::vector<size_t> TopMagnitudeCoordinates(std::span<const double> values, size_t k);
std::vector<size_t> TopMagnitudeCoordinates(std::span<const float> values, size_t k);

// Mean |(delta_i - mu_i) / sigma_tilde_i| over the k largest-|mu_i|
// coordinates. Throws FieldUndefinedError unless the field is Defined and
// ParameterError unless 1 <= k <= dim.
double Zeta(std::span<const double> delta, const LocalField& field, size_t k);
double Zeta(std::span<const float> delta, const LocalField& field, size_t k);

// Mean |mu_i| / sigma_tilde_i over the same coordinate selection.
double Significance(const LocalField& field, size_t k);

struct WalkStep {
  std::vector<double> point;
  std::optional<double> significance;  // absent when the field is undefined
  FieldStatus status = FieldStatus::kDefined;
};

// Follows s_{n+1} = s_n + mu(s_n) for up to `steps` moves. Stops at the
// first point whose field is not Defined, which is recorded with its status.
std::vector<WalkStep> FieldWalk(std::span<const double> start, size_t steps,
                                const FieldParams& params, std::span<const Shard> shards);

}  // namespace cfield

#endif  // CFIELD_FIELD_H_
