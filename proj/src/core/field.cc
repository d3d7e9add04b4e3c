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

#include "cfield/field.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cfield {

void FieldParams::Validate() const {
  if (top_n < 1) throw ParameterError("top_n must be >= 1");
  if (!(d_max > 0.0)) throw ParameterError("d_max must be > 0");
  if (!(p >= 0.0)) throw ParameterError("p must be >= 0");
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be > 0");
  if (!(sigma_min > 0.0)) throw ParameterError("sigma_min must be > 0");
  if (top_n_zeta < 1) throw ParameterError("top_n_zeta must be >= 1");
  if (min_support < 1) throw ParameterError("min_support must be >= 1");
}

const char* FieldStatusName(FieldStatus status) {
  switch (status) {
    case FieldStatus::kDefined: return "Defined";
    case FieldStatus::kOutOfCorpus: return "OutOfCorpus";
    case FieldStatus::kInsufficientStatistics: return "InsufficientStatistics";
  }
  return "Unknown";
}

size_t EffectiveK(const FieldParams& params, size_t dim) {
  return std::min(params.top_n_zeta, dim);
}

std::vector<Neighbor> CollectDeltaNeighbors(std::span<const double> anchor,
                                            const FieldParams& params,
                                            std::span<const Shard> shards,
                                            std::optional<RecordRef> exclude) {
  params.Validate();
  SearchOptions options;
  options.metric = Metric::kL2;
  options.d_max = params.d_max;
  options.filter = [exclude](const Shard& shard, RecordRef ref) {
    if (exclude && ref == *exclude) return false;
    return shard.has_delta(ref.index);
  };
  return Search(anchor, params.top_n, options, shards);
}

std::vector<double> IdwWeights(std::span<const Neighbor> neighbors, double p, double epsilon) {
  std::vector<double> w(neighbors.size());
  double total = 0.0;
  for (size_t j = 0; j < neighbors.size(); ++j) {
    w[j] = std::pow(neighbors[j].distance + epsilon, -p);
    total += w[j];
  }
  for (double& x : w) x /= total;
  return w;
}

LocalField EstimateField(std::span<const double> anchor, const FieldParams& params,
                         std::span<const Shard> shards, std::optional<RecordRef> exclude) {
  LocalField field;
  field.neighbors = CollectDeltaNeighbors(anchor, params, shards, exclude);
  field.support = field.neighbors.size();
  if (field.support == 0) {
    field.status = FieldStatus::kOutOfCorpus;
    field.neighbors.clear();
    return field;
  }
  if (field.support < params.min_support) {
    field.status = FieldStatus::kInsufficientStatistics;
    return field;
  }
  field.status = FieldStatus::kDefined;
  field.weights = IdwWeights(field.neighbors, params.p, params.epsilon);

  const size_t dim = anchor.size();
  field.mu.assign(dim, 0.0);
  for (size_t j = 0; j < field.support; ++j) {
    const RecordRef ref = field.neighbors[j].ref;
    auto delta = shards[ref.shard].delta(ref.index);
    for (size_t i = 0; i < dim; ++i) field.mu[i] += field.weights[j] * delta[i];
  }
  std::vector<double> var(dim, 0.0);
  for (size_t j = 0; j < field.support; ++j) {
    const RecordRef ref = field.neighbors[j].ref;
    auto delta = shards[ref.shard].delta(ref.index);
    for (size_t i = 0; i < dim; ++i) {
      const double r = delta[i] - field.mu[i];
      var[i] += field.weights[j] * r * r;
    }
  }
  field.sigma_tilde.resize(dim);
  for (size_t i = 0; i < dim; ++i) {
    field.sigma_tilde[i] = std::max(std::sqrt(var[i]), params.sigma_min);
  }
  return field;
}

LocalField EstimateField(std::span<const float> anchor, const FieldParams& params,
                         std::span<const Shard> shards, std::optional<RecordRef> exclude) {
  std::vector<double> a(anchor.begin(), anchor.end());
  return EstimateField(std::span<const double>(a), params, shards, exclude);
}

namespace {

template <typename T>
std::vector<size_t> TopMagnitude(std::span<const T> values, size_t k) {
  if (k < 1 || k > values.size()) {
    throw ParameterError("k must lie in [1, " + std::to_string(values.size()) + "]");
  }
  std::vector<size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](size_t a, size_t b) {
                      const double ma = std::fabs(static_cast<double>(values[a]));
                      const double mb = std::fabs(static_cast<double>(values[b]));
                      if (ma != mb) return ma > mb;
                      return a < b;
                    });
  idx.resize(k);
  return idx;
}

template <typename T>
double ZetaImpl(std::span<const T> delta, const LocalField& field, size_t k) {
  if (!field.defined()) throw FieldUndefinedError(field.status);
  if (delta.size() != field.mu.size()) {
    throw DimensionError("delta length " + std::to_string(delta.size()) +
                         " does not match field dim " + std::to_string(field.mu.size()));
  }
  double sum = 0.0;
  for (size_t i : TopMagnitudeCoordinates(std::span<const double>(field.mu), k)) {
    sum += std::fabs((static_cast<double>(delta[i]) - field.mu[i]) / field.sigma_tilde[i]);
  }
  return sum / static_cast<double>(k);
}

}  // namespace

std::vector<size_t> TopMagnitudeCoordinates(std::span<const double> values, size_t k) {
  return TopMagnitude(values, k);
}
std::vector<size_t> TopMagnitudeCoordinates(std::span<const float> values, size_t k) {
  return TopMagnitude(values, k);
}

double Zeta(std::span<const double> delta, const LocalField& field, size_t k) {
  return ZetaImpl(delta, field, k);
}
double Zeta(std::span<const float> delta, const LocalField& field, size_t k) {
  return ZetaImpl(delta, field, k);
}

double Significance(const LocalField& field, size_t k) {
  if (!field.defined()) throw FieldUndefinedError(field.status);
  double sum = 0.0;
  for (size_t i : TopMagnitudeCoordinates(std::span<const double>(field.mu), k)) {
    sum += std::fabs(field.mu[i]) / field.sigma_tilde[i];
  }
  return sum / static_cast<double>(k);
}

std::vector<WalkStep> FieldWalk(std::span<const double> start, size_t steps,
                                const FieldParams& params, std::span<const Shard> shards) {
  if (steps < 1) throw ParameterError("steps must be >= 1");
  const size_t k = EffectiveK(params, start.size());
  std::vector<WalkStep> path;
  std::vector<double> point(start.begin(), start.end());
  for (size_t n = 0; n <= steps; ++n) {
    const LocalField field = EstimateField(std::span<const double>(point), params, shards);
    WalkStep step;
    step.point = point;
    step.status = field.status;
    if (!field.defined()) {
      path.push_back(std::move(step));
      break;
    }
    step.significance = Significance(field, k);
    path.push_back(std::move(step));
    for (size_t i = 0; i < point.size(); ++i) point[i] += field.mu[i];
  }
  return path;
}

}  // namespace cfield
