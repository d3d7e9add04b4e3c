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

#include "cfield/calibrate.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "parallel.h"
#include "random.h"

namespace cfield {
double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double NormalQuantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("quantile probability must lie in (0, 1)");
  // Acklam's rational approximation (relative error ~1e-9), then one Halley
  // step against erfc, which brings it to full double precision.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;
  double x;
  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - kLow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = NormalCdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

std::vector<size_t> SeededPermutation(size_t n, uint64_t seed) {
  std::vector<size_t> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = i;
  uint64_t state = seed;
  for (size_t i = n; i > 1; --i) {
    // Modulo bias is below 2^-50 for any realistic neighbor count.
    const size_t j = static_cast<size_t>(internal::SplitMix64(state) % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

double Median(std::vector<double> values) {
  if (values.empty()) throw ParameterError("median of an empty set");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

CoverageReport CalibrateAnchor(std::span<const double> anchor, const FieldParams& params,
                               const CalibrationOptions& options,
                               std::span<const Shard> shards, std::optional<RecordRef> exclude) {
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
    throw ParameterError("train_fraction must lie in (0, 1)");
  }
  CoverageReport report;
  const std::vector<Neighbor> neighbors = CollectDeltaNeighbors(anchor, params, shards, exclude);
  const size_t n = neighbors.size();
  const auto n_train = std::min<size_t>(
      n, static_cast<size_t>(std::llround(options.train_fraction * static_cast<double>(n))));
  report.n_train = n_train;
  report.n_test = n - n_train;
  if (n_train < 2 || report.n_test < 1) {
    report.skipped = true;
    return report;
  }

  const std::vector<size_t> perm = SeededPermutation(n, options.seed);
  std::vector<Neighbor> train;
  std::vector<Neighbor> test;
  for (size_t i = 0; i < n; ++i) (i < n_train ? train : test).push_back(neighbors[perm[i]]);

  const size_t k = EffectiveK(params, anchor.size());
  const std::vector<size_t> coords = TopMagnitudeCoordinates(anchor, k);
  const std::vector<double> w = IdwWeights(train, params.p, params.epsilon);

  std::vector<double> mu(k, 0.0), sigma(k, 0.0);
  for (size_t j = 0; j < train.size(); ++j) {
    auto delta = shards[train[j].ref.shard].delta(train[j].ref.index);
    for (size_t c = 0; c < k; ++c) mu[c] += w[j] * delta[coords[c]];
  }
  for (size_t j = 0; j < train.size(); ++j) {
    auto delta = shards[train[j].ref.shard].delta(train[j].ref.index);
    for (size_t c = 0; c < k; ++c) {
      const double r = delta[coords[c]] - mu[c];
      sigma[c] += w[j] * r * r;
    }
  }
  for (double& s : sigma) s = std::max(std::sqrt(s), params.sigma_min);

  std::array<double, 3> thresholds;
  for (size_t q = 0; q < 3; ++q) thresholds[q] = NormalQuantile((1.0 + kCoverageLevels[q]) / 2.0);

  std::array<uint64_t, 3> inside = {0, 0, 0};
  for (const Neighbor& nb : test) {
    auto delta = shards[nb.ref.shard].delta(nb.ref.index);
    for (size_t c = 0; c < k; ++c) {
      const double z = std::fabs((delta[coords[c]] - mu[c]) / sigma[c]);
      for (size_t q = 0; q < 3; ++q) inside[q] += z <= thresholds[q] ? 1 : 0;
    }
  }
  report.n_values = static_cast<uint64_t>(test.size()) * k;
  report.passed = true;
  for (size_t q = 0; q < 3; ++q) {
    report.coverage[q] = static_cast<double>(inside[q]) / static_cast<double>(report.n_values);
    report.errors[q] = std::fabs(report.coverage[q] - kCoverageLevels[q]);
    double tolerance = kCoverageTolerances[q];
    if (options.allow_sampling_error) {
      const double level = kCoverageLevels[q];
      tolerance += 1.96 * std::sqrt(level * (1.0 - level) / static_cast<double>(report.n_values));
    }
    report.passed = report.passed && report.errors[q] < tolerance;
  }
  return report;
}

CalibrationSummary CalibrateCorpus(std::span<const Anchor> anchors, const FieldParams& params,
                                   const CalibrationOptions& options,
                                   std::span<const Shard> shards) {
  if (anchors.empty()) throw ParameterError("no anchors given");
  CalibrationSummary summary;
  summary.anchors_total = anchors.size();
  summary.reports.resize(anchors.size());
  internal::ParallelFor(anchors.size(), [&](size_t i) {
    summary.reports[i] =
        CalibrateAnchor(anchors[i].point, params, options, shards, anchors[i].self);
  });

  std::array<std::vector<double>, 3> errors, coverage;
  for (const CoverageReport& r : summary.reports) {
    if (r.skipped) {
      ++summary.anchors_skipped;
      continue;
    }
    if (r.passed) ++summary.anchors_passed;
    for (size_t q = 0; q < 3; ++q) {
      errors[q].push_back(r.errors[q]);
      coverage[q].push_back(r.coverage[q]);
    }
  }
  if (!errors[0].empty()) {
    std::array<double, 3> e, c;
    for (size_t q = 0; q < 3; ++q) {
      e[q] = Median(errors[q]);
      c[q] = Median(coverage[q]);
    }
    summary.median_errors = e;
    summary.median_coverage = c;
  }
  return summary;
}

}  // namespace cfield
