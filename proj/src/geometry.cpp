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
#include "incnerf/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace incnerf::geometry {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

/// Rotation matrix -> unit quaternion (w, x, y, z) with w >= 0, using the
/// max-diagonal branch so the divisor stays well away from zero.
void quaternion_from_matrix(const Mat3d& r, double q[4]) {
  const double t = trace(r);
  if (t > 0.0) {
    double s = std::sqrt(t + 1.0) * 2.0;
    q[0] = 0.25 * s;
    q[1] = (r(2, 1) - r(1, 2)) / s;
    q[2] = (r(0, 2) - r(2, 0)) / s;
    q[3] = (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    q[0] = (r(2, 1) - r(1, 2)) / s;
    q[1] = 0.25 * s;
    q[2] = (r(0, 1) + r(1, 0)) / s;
    q[3] = (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    q[0] = (r(0, 2) - r(2, 0)) / s;
    q[1] = (r(0, 1) + r(1, 0)) / s;
    q[2] = 0.25 * s;
    q[3] = (r(1, 2) + r(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    q[0] = (r(1, 0) - r(0, 1)) / s;
    q[1] = (r(0, 2) + r(2, 0)) / s;
    q[2] = (r(1, 2) + r(2, 1)) / s;
    q[3] = 0.25 * s;
  }
  double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  for (int i = 0; i < 4; ++i) q[i] /= n;
  if (q[0] < 0.0) {
    for (int i = 0; i < 4; ++i) q[i] = -q[i];
  }
}

/// One separable pass of the binomial kernel (1,4,6,4,1)/16 with clamp
/// padding, then decimation at even indices.
Image blur_decimate(const Image& src) {
  static const float kKernel[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16,
                                   1.f / 16};
  const int w = src.width, h = src.height;
  // horizontal
  Image tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        float acc = 0.f;
        for (int k = -2; k <= 2; ++k) {
          const int xx = std::clamp(x + k, 0, w - 1);
          acc += kKernel[k + 2] * src.at(xx, y, c);
        }
        tmp.at(x, y, c) = acc;
      }
    }
  }
  // vertical
  Image blurred(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        float acc = 0.f;
        for (int k = -2; k <= 2; ++k) {
          const int yy = std::clamp(y + k, 0, h - 1);
          acc += kKernel[k + 2] * tmp.at(x, yy, c);
        }
        blurred.at(x, y, c) = acc;
      }
    }
  }
  Image out(w / 2, h / 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = blurred.at(2 * x, 2 * y, c);
  return out;
}

}  // namespace

AxisAngle matrix_to_axis_angle(const Mat3d& r) {
  const Mat3d rtr = transpose(r) * r;
  if (max_abs_diff(rtr, Mat3d::identity()) > 1e-6) {
    throw NotARotationError("matrix_to_axis_angle: R'R deviates from identity");
  }
  if (determinant(r) <= 0.0) {
    throw NotARotationError("matrix_to_axis_angle: determinant is not positive");
  }
  double q[4];
  quaternion_from_matrix(r, q);
  const double vn = std::sqrt(q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  const double theta = 2.0 * std::atan2(vn, q[0]);
  Vec3d v{q[1], q[2], q[3]};
  if (vn < 1e-12) {
    // q ~ (1, w/2): first-order inverse of the exponential map.
    return AxisAngle{v * 2.0};
  }
  return AxisAngle{v * (theta / vn)};
}

double focal_from_fov(double fov_deg, double width) {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) {
    throw DomainError("focal_from_fov: fov must lie in (0, 180) degrees");
  }
  return (width / 2.0) / std::tan(fov_deg * kPi / 360.0);
}

Ray pixel_ray(const CameraPose& pose, const Intrinsics& intrinsics, double u,
              double v) {
  const Mat3d r = rotation_from_axis_angle<double>(pose.rotation);
  Ray ray;
  ray.origin = pose.translation;
  ray.direction = ray_direction<double>(r, intrinsics.focal, u, v,
                                        intrinsics.cx(), intrinsics.cy());
  return ray;
}

ImagePyramid build_pyramid(const Image& image, int depth) {
  if (depth < 1) throw TooSmallError("build_pyramid: depth must be >= 1");
  const int min_dim = 1 << (depth - 1);
  if (image.width < min_dim || image.height < min_dim) {
    throw TooSmallError("build_pyramid: image too small for requested depth");
  }
  ImagePyramid pyr;
  pyr.levels.resize(depth);
  pyr.levels[depth - 1] = image;
  for (int level = depth - 2; level >= 0; --level) {
    pyr.levels[level] = blur_decimate(pyr.levels[level + 1]);
  }
  return pyr;
}

}  // namespace incnerf::geometry
