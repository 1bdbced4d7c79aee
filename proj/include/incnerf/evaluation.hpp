// Copyright 2026 the incnerf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef INCNERF_EVALUATION_HPP_
#define INCNERF_EVALUATION_HPP_

#include <span>
#include <vector>

#include "incnerf/geometry.hpp"
#include "incnerf/image.hpp"
#include "incnerf/vec.hpp"

namespace incnerf::evaluation {

/// Similarity transform p -> scale * rotation * p + translation.
struct Sim3 {
  double scale = 1.0;
  Mat3d rotation = Mat3d::identity();
  Vec3d translation{};

  Vec3d apply(const Vec3d& p) const {
    return rotation * p * scale + translation;
  }
  Sim3 inverse() const;
  Sim3 compose(const Sim3& inner) const;  // apply inner first, then this
};

/// Camera centers plus one virtual point per pose: the camera-frame point
/// (0,0,1) pushed to world coordinates, so rotations constrain the fit.
std::vector<Vec3d> augment_virtual_points(
    std::span<const geometry::CameraPose> poses);

/// Least-squares Sim(3) mapping `source` onto `target` (Umeyama with
/// scale). Throws DegenerateError when the source covariance is
/// rank-deficient beyond recovery (rank < 2).
Sim3 align_sim3(std::span<const Vec3d> source, std::span<const Vec3d> target);

/// Geodesic angle between two rotations, in degrees.
double rotation_error_deg(const Mat3d& r_a, const Mat3d& r_b);

double translation_error(const Vec3d& t_a, const Vec3d& t_b);

/// 10*log10(1/MSE) over linear [0,1] intensities, mean over channels;
/// identical images report +infinity. Throws DimensionMismatch.
double psnr(const Image& a, const Image& b);

struct TrajectoryMetrics {
  double delta_r_deg = 0.0;  // mean over images
  double delta_t = 0.0;      // mean over images, target units
  std::vector<double> per_image_rot_deg;
  std::vector<double> per_image_trans;
  Sim3 alignment;  // maps estimated coordinates into target coordinates
};

/// Aligns the estimated trajectory onto the reference with camera centers
/// plus virtual points, then reports mean rotation/translation errors.
/// Both clouds are spread-normalized before the fit so that a trajectory
/// differing from the reference by an exact Sim(3) scores (0, 0).
TrajectoryMetrics evaluate_trajectory(
    std::span<const geometry::CameraPose> estimated,
    std::span<const geometry::CameraPose> reference);

}  // namespace incnerf::evaluation

#endif  // INCNERF_EVALUATION_HPP_
