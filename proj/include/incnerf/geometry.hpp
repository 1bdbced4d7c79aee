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
#ifndef INCNERF_GEOMETRY_HPP_
#define INCNERF_GEOMETRY_HPP_

#include <cmath>
#include <vector>

#include "incnerf/autodiff.hpp"
#include "incnerf/errors.hpp"
#include "incnerf/image.hpp"
#include "incnerf/vec.hpp"

namespace incnerf::geometry {

/// Axis-angle rotation: direction = axis, magnitude = angle in radians.
/// The zero vector is the identity.
struct AxisAngle {
  Vec3d omega{};
};

/// Camera-to-world pose: x_world = R(rotation) * x_camera + translation.
struct CameraPose {
  Vec3d rotation{};     // axis-angle
  Vec3d translation{};  // world units
};

/// Shared pinhole intrinsics. The principal point is fixed at the image
/// center; the focal length is the single learnable intrinsic.
struct Intrinsics {
  double focal = 0.0;  // pixels
  int width = 0;
  int height = 0;

  double cx() const { return width / 2.0; }
  double cy() const { return height / 2.0; }
};

/// Ray origin + direction. The direction is deliberately not normalized:
/// the ray parameter t is measured in units of the back-projected pixel.
struct Ray {
  Vec3d origin{};
  Vec3d direction{};
};

/// Gaussian image pyramid. levels[0] is the coarsest, levels.back() the
/// source image; each level has floor(half) the dimensions of the next.
struct ImagePyramid {
  std::vector<Image> levels;
  int depth() const { return static_cast<int>(levels.size()); }
};

inline constexpr double kSmallAngle = 1e-8;

/// Rodrigues' rotation, templated so it can be recorded on the tape.
/// Below kSmallAngle the sin/cos coefficients switch to their second-order
/// Taylor expansions, which keeps the map (and its derivative) smooth
/// through the identity.
template <typename T>
Mat3<T> rotation_from_axis_angle(const Vec3<T>& w) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  using ad::scalar_value;

  const T theta_sq = w.x * w.x + w.y * w.y + w.z * w.z;
  T a;  // sin(theta)/theta
  T b;  // (1 - cos(theta))/theta^2
  if (scalar_value(theta_sq) < kSmallAngle * kSmallAngle) {
    a = 1.0 - theta_sq * (1.0 / 6.0);
    b = 0.5 - theta_sq * (1.0 / 24.0);
  } else {
    const T theta = sqrt(theta_sq);
    a = sin(theta) / theta;
    b = (1.0 - cos(theta)) / theta_sq;
  }
  // R = (1 - b*theta^2) I + b w w^T + a [w]x, and 1 - b*theta^2 == cos(theta).
  const T c = 1.0 - b * theta_sq;
  Mat3<T> r;
  r(0, 0) = c + b * w.x * w.x;
  r(0, 1) = b * w.x * w.y - a * w.z;
  r(0, 2) = b * w.x * w.z + a * w.y;
  r(1, 0) = b * w.y * w.x + a * w.z;
  r(1, 1) = c + b * w.y * w.y;
  r(1, 2) = b * w.y * w.z - a * w.x;
  r(2, 0) = b * w.z * w.x - a * w.y;
  r(2, 1) = b * w.z * w.y + a * w.x;
  r(2, 2) = c + b * w.z * w.z;
  return r;
}

inline Mat3d axis_angle_to_matrix(const AxisAngle& aa) {
  return rotation_from_axis_angle<double>(aa.omega);
}

/// Inverse of axis_angle_to_matrix via quaternion extraction; the result
/// magnitude lies in [0, pi]. Throws NotARotation when R'R deviates from I
/// by more than 1e-6 or det(R) <= 0.
AxisAngle matrix_to_axis_angle(const Mat3d& r);

/// focal = (width/2) / tan(fov/2). Throws DomainError outside (0, 180).
double focal_from_fov(double fov_deg, double width);

/// Back-projects a continuous pixel coordinate through the camera:
/// direction = R * ((u - cx)/f, (v - cy)/f, 1), origin = translation.
template <typename T>
Vec3<T> ray_direction(const Mat3<T>& rotation, const T& focal, double u,
                      double v, double cx, double cy) {
  const Vec3<T> cam{(u - cx) / focal, (v - cy) / focal,
                    ad::constant_like(focal, 1.0)};
  return rotation * cam;
}

Ray pixel_ray(const CameraPose& pose, const Intrinsics& intrinsics, double u,
              double v);

/// Gaussian pyramid with the 5-tap binomial kernel (1,4,6,4,1)/16, applied
/// separably with clamp padding, decimated by keeping even indices.
/// Throws TooSmall when the image cannot support `depth` levels.
ImagePyramid build_pyramid(const Image& image, int depth);

}  // namespace incnerf::geometry

#endif  // INCNERF_GEOMETRY_HPP_
