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

#include "cfield/ballistics.h"

#include <numbers>

#include "parallel.h"

namespace cfield {

void BallisticsParams::Validate() const {
  if (!(g > 0.0)) throw ParameterError("g must be > 0");
  if (!(launch_speed > 0.0)) throw ParameterError("launch_speed must be > 0");
  if (!(dt > 0.0)) throw ParameterError("dt must be > 0");
  if (n_trajectories < 2) throw ParameterError("n_trajectories must be >= 2");
  if (!(theta_min >= 0.0 && theta_min < theta_max && theta_max <= 90.0)) {
    throw ParameterError("theta range must satisfy 0 <= min < max <= 90");
  }
  if (!(x_max > 0.0 && y_max > 0.0)) throw ParameterError("domain box must be non-empty");
}

std::vector<Point2> SimulateTrajectory(double theta_deg, const BallisticsParams& params,
                                       double drag_coeff) {
  params.Validate();
  if (!(theta_deg >= 0.0 && theta_deg <= 90.0)) {
    throw ParameterError("launch angle must lie in [0, 90] degrees");
  }
  if (!(drag_coeff >= 0.0)) throw ParameterError("drag coefficient must be >= 0");
  const double theta = theta_deg * std::numbers::pi / 180.0;
  double x = 0.0, y = 0.0;
  double vx = params.launch_speed * std::cos(theta);
  double vy = params.launch_speed * std::sin(theta);
  std::vector<Point2> path{{x, y}};
  while (true) {
    x += params.dt * vx;
    y += params.dt * vy;
    if (y < 0.0 || x < 0.0 || x > params.x_max || y > params.y_max) break;
    path.push_back({x, y});
    const double speed = std::hypot(vx, vy);
    const double ax = -drag_coeff * speed * vx;
    const double ay = -params.g - drag_coeff * speed * vy;
    vx += params.dt * ax;
    vy += params.dt * ay;
  }
  return path;
}

double CorpusAngle(const BallisticsParams& params, size_t i) {
  const double span = params.theta_max - params.theta_min;
  return params.theta_min + span * static_cast<double>(i) /
                                static_cast<double>(params.n_trajectories - 1);
}

std::vector<Shard> BuildBallisticsCorpus(const BallisticsParams& params) {
  params.Validate();
  std::vector<std::vector<Point2>> paths(params.n_trajectories);
  internal::ParallelFor(params.n_trajectories, [&](size_t i) {
    paths[i] = SimulateTrajectory(CorpusAngle(params, i), params);
  });
  Shard shard(2);
  std::vector<float> flat;
  for (const auto& path : paths) {
    flat.clear();
    for (const Point2& p : path) {
      flat.push_back(static_cast<float>(p[0]));
      flat.push_back(static_cast<float>(p[1]));
    }
    shard.IngestFlat(flat, path.size());
  }
  shard.Seal();
  std::vector<Shard> shards;
  shards.push_back(std::move(shard));
  return shards;
}

FieldParams BallisticsFieldParams() {
  FieldParams p;
  p.top_n = 10;
  p.d_max = 0.03;
  p.p = 1.0;
  p.epsilon = 1e-8;
  p.top_n_zeta = 2;
  p.min_support = 2;
  return p;
}

ExperimentResult RunExperiment(const std::vector<Shard>& corpus, const FieldParams& field_params,
                               const BallisticsParams& params, double query_theta,
                               double drag_coeff, bool replace_with_field_mean,
                               bool include_launch_point) {
  if (!(query_theta > 0.0 && query_theta < 90.0)) {
    throw ParameterError("query angle must lie strictly inside (0, 90) degrees");
  }
  const std::vector<Point2> path = SimulateTrajectory(query_theta, params, drag_coeff);
  ExperimentResult result;
  result.query_points = path.empty() ? 0 : path.size() - 1;
  const size_t k = EffectiveK(field_params, 2);

  // Queries go through the same float32 rounding as stored corpus points.
  std::vector<std::optional<ZetaSample>> slots(result.query_points);
  internal::ParallelFor(result.query_points, [&](size_t step) {
    if (step == 0 && !include_launch_point) return;
    const double p0[2] = {static_cast<float>(path[step][0]), static_cast<float>(path[step][1])};
    const double p1[2] = {static_cast<float>(path[step + 1][0]),
                          static_cast<float>(path[step + 1][1])};
    const LocalField field = EstimateField(std::span<const double>(p0, 2), field_params, corpus);
    if (!field.defined()) return;
    double delta[2] = {p1[0] - p0[0], p1[1] - p0[1]};
    if (replace_with_field_mean) {
      delta[0] = field.mu[0];
      delta[1] = field.mu[1];
    }
    slots[step] = ZetaSample{step, path[step], Zeta(std::span<const double>(delta, 2), field, k)};
  });

  double sum = 0.0;
  for (const auto& s : slots) {
    if (!s) continue;
    sum += s->zeta;
    result.samples.push_back(*s);
  }
  if (result.samples.empty()) {
    throw NoSupportError("no query point has a defined field");
  }
  result.zeta_mean = sum / static_cast<double>(result.samples.size());
  return result;
}

}  // namespace cfield
