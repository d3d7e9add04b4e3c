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

// 2-d projectile corpus. Projectiles leave the origin at a common speed and
// angles spread uniformly over [0, 90] degrees; positions are recorded every
// dt until the projectile drops below ground or leaves the [0, x_max] x
// [0, y_max] box. Query trajectories with quadratic drag depart from the
// corpus flow and score a large zeta.

#ifndef CFIELD_BALLISTICS_H_
#define CFIELD_BALLISTICS_H_

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cfield/field.h"
#include "cfield/store.h"

namespace cfield {

struct BallisticsParams {
  double g = 9.81;
  double launch_speed = std::sqrt(2.0 * 9.81);
  double dt = 0.001;
  size_t n_trajectories = 1000;
  double theta_min = 0.0;  // degrees
  double theta_max = 90.0;
  double x_max = 2.0;
  double y_max = 1.0;

  void Validate() const;
};

inline constexpr double kDefaultDragCoeff = 2.0;
inline constexpr double kDefaultQueryTheta = 33.0;

using Point2 = std::array<double, 2>;

// Explicit first-order stepping from the origin: position += dt * velocity,
// then velocity += dt * acceleration, with acceleration (0, -g) minus
// drag_coeff * |v| * v. Every in-box position is recorded; the first point
// with y < 0 or outside the box ends the trajectory and is not recorded.
std::vector<Point2> SimulateTrajectory(double theta_deg, const BallisticsParams& params,
                                       double drag_coeff = 0.0);

// The launch angle of trajectory i of n, uniformly spaced over
// [theta_min, theta_max].
double CorpusAngle(const BallisticsParams& params, size_t i);

// Simulates every corpus angle and ingests each trajectory as one sequence of
// a single sealed shard.
std::vector<Shard> BuildBallisticsCorpus(const BallisticsParams& params);

// Field settings of the toy experiment: N = 10, d_max = 0.03, p = 1, k = 2.
FieldParams BallisticsFieldParams();

struct ZetaSample {
  size_t step = 0;
  Point2 position{};
  double zeta = 0.0;
};

struct ExperimentResult {
  double zeta_mean = 0.0;
  std::vector<ZetaSample> samples;
  size_t query_points = 0;  // transitions in the query trajectory
};

// Scores every transition of the query trajectory whose start point has a
// Defined field. Throws NoSupportError when none does. With
// `replace_with_field_mean` each query delta is swapped for the field mean
// at its start point (a zero-zeta control). The launch point is shared by
// every corpus sequence, so its neighbor set is decided purely by tie order;
// it is skipped unless `include_launch_point` is set.
ExperimentResult RunExperiment(const std::vector<Shard>& corpus, const FieldParams& field_params,
                               const BallisticsParams& params, double query_theta,
                               double drag_coeff, bool replace_with_field_mean = false,
                               bool include_launch_point = false);

}  // namespace cfield

#endif  // CFIELD_BALLISTICS_H_
