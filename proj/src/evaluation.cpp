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
#include "incnerf/evaluation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace incnerf::evaluation {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

Eigen::Vector3d to_eigen(const Vec3d& v) { return {v.x, v.y, v.z}; }
Vec3d from_eigen(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Mat3d from_eigen(const Eigen::Matrix3d& m) {
  Mat3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = m(i, j);
  return r;
}

Eigen::Matrix3d to_eigen(const Mat3d& m) {
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = m(i, j);
  return r;
}

struct Normalization {
  Vec3d centroid{};
  double spread = 1.0;  // rms distance from the centroid
};

Normalization center_spread(std::span<const Vec3d> pts) {
  Normalization n;
  Vec3d mu{};
  for (const Vec3d& p : pts) mu = mu + p;
  mu = mu * (1.0 / static_cast<double>(pts.size()));
  double acc = 0.0;
  for (const Vec3d& p : pts) acc += squared_norm(p - mu);
  n.centroid = mu;
  n.spread = std::sqrt(acc / static_cast<double>(pts.size()));
  if (n.spread < 1e-12) n.spread = 1.0;  // all centers coincide
  return n;
}

}  // namespace

Sim3 Sim3::inverse() const {
  Sim3 inv;
  inv.scale = 1.0 / scale;
  inv.rotation = transpose(rotation);
  inv.translation = inv.rotation * translation * (-inv.scale);
  return inv;
}

Sim3 Sim3::compose(const Sim3& inner) const {
  // apply(p) = this(inner(p))
  Sim3 out;
  out.scale = scale * inner.scale;
  out.rotation = rotation * inner.rotation;
  out.translation = rotation * inner.translation * scale + translation;
  return out;
}

std::vector<Vec3d> augment_virtual_points(
    std::span<const geometry::CameraPose> poses) {
  std::vector<Vec3d> pts;
  pts.reserve(poses.size() * 2);
  for (const geometry::CameraPose& p : poses) {
    const Mat3d r = geometry::axis_angle_to_matrix({p.rotation});
    pts.push_back(p.translation);
    pts.push_back(p.translation + Vec3d{r(0, 2), r(1, 2), r(2, 2)});
  }
  return pts;
}

Sim3 align_sim3(std::span<const Vec3d> source, std::span<const Vec3d> target) {
  if (source.size() != target.size() || source.size() < 3) {
    throw DegenerateError("align_sim3: need >= 3 paired points");
  }
  const std::size_t n = source.size();
  Eigen::Vector3d mu_s = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_t = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_s += to_eigen(source[i]);
    mu_t += to_eigen(target[i]);
  }
  mu_s /= static_cast<double>(n);
  mu_t /= static_cast<double>(n);

  Eigen::Matrix3d sigma = Eigen::Matrix3d::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d ps = to_eigen(source[i]) - mu_s;
    const Eigen::Vector3d pt = to_eigen(target[i]) - mu_t;
    sigma += pt * ps.transpose();
    var_s += ps.squaredNorm();
  }
  sigma /= static_cast<double>(n);
  var_s /= static_cast<double>(n);

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d d = svd.singularValues();
  if (var_s < 1e-24 || d(1) < 1e-12 * std::max(d(0), 1.0)) {
    throw DegenerateError("align_sim3: point covariance rank < 2");
  }
  Eigen::Vector3d s_fix = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    s_fix(2) = -1.0;
  }
  const Eigen::Matrix3d rot =
      svd.matrixU() * s_fix.asDiagonal() * svd.matrixV().transpose();
  const double scale = d.dot(s_fix) / var_s;
  const Eigen::Vector3d trans = mu_t - scale * rot * mu_s;

  Sim3 out;
  out.scale = scale;
  out.rotation = from_eigen(rot);
  out.translation = from_eigen(trans);
  return out;
}

double rotation_error_deg(const Mat3d& r_a, const Mat3d& r_b) {
  const Mat3d rel = transpose(r_a) * r_b;
  // Same geodesic angle as acos((trace-1)/2), evaluated through atan2 so the
  // result stays accurate near 0 and pi instead of losing half the digits.
  const double c = std::clamp((trace(rel) - 1.0) / 2.0, -1.0, 1.0);
  const Vec3d vex{rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0),
                  rel(1, 0) - rel(0, 1)};
  const double s = 0.5 * norm(vex);
  return std::atan2(s, c) * 180.0 / kPi;
}

double translation_error(const Vec3d& t_a, const Vec3d& t_b) {
  return norm(t_a - t_b);
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw DimensionMismatchError("psnr: image dimensions differ");
  }
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

TrajectoryMetrics evaluate_trajectory(
    std::span<const geometry::CameraPose> estimated,
    std::span<const geometry::CameraPose> reference) {
  if (estimated.size() != reference.size() || estimated.empty()) {
    throw DimensionMismatchError("evaluate_trajectory: pose count mismatch");
  }
  // Normalize each center cloud to zero mean / unit spread before adding the
  // unit-length virtual points; otherwise the fixed virtual offset fights
  // the scale component of the fit and an exact Sim(3) image of the
  // reference would not score zero.
  std::vector<Vec3d> est_centers(estimated.size()), ref_centers(reference.size());
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    est_centers[i] = estimated[i].translation;
    ref_centers[i] = reference[i].translation;
  }
  const Normalization en = center_spread(est_centers);
  const Normalization rn = center_spread(ref_centers);

  auto normalized_poses = [](std::span<const geometry::CameraPose> poses,
                             const Normalization& nz) {
    std::vector<geometry::CameraPose> out(poses.begin(), poses.end());
    for (geometry::CameraPose& p : out) {
      p.translation = (p.translation - nz.centroid) * (1.0 / nz.spread);
    }
    return out;
  };
  const std::vector<Vec3d> src =
      augment_virtual_points(normalized_poses(estimated, en));
  const std::vector<Vec3d> dst =
      augment_virtual_points(normalized_poses(reference, rn));
  Sim3 core;
  try {
    core = align_sim3(src, dst);
  } catch (const DegenerateError&) {
    // Happens when both clouds sit on one line (a forward trajectory seen
    // along its own optical axis). The points cannot fix the roll, so fit
    // the rotation from the pose rotations instead and recover scale and
    // translation around it from the centers.
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < estimated.size(); ++i) {
      const Mat3d re = geometry::axis_angle_to_matrix({estimated[i].rotation});
      const Mat3d rr = geometry::axis_angle_to_matrix({reference[i].rotation});
      m += to_eigen(rr) * to_eigen(re).transpose();
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(
        m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d fix = Eigen::Vector3d::Ones();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
      fix(2) = -1.0;
    }
    const Eigen::Matrix3d q =
        svd.matrixU() * fix.asDiagonal() * svd.matrixV().transpose();
    core.rotation = from_eigen(q);
    double num = 0.0, den = 0.0;
    const std::size_t n = src.size();
    Vec3d mu_s{}, mu_t{};
    for (std::size_t i = 0; i < n; ++i) {
      mu_s = mu_s + src[i];
      mu_t = mu_t + dst[i];
    }
    mu_s = mu_s * (1.0 / static_cast<double>(n));
    mu_t = mu_t * (1.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3d ps = core.rotation * (src[i] - mu_s);
      num += dot(dst[i] - mu_t, ps);
      den += squared_norm(src[i] - mu_s);
    }
    core.scale = den > 1e-24 ? num / den : 1.0;
    if (core.scale <= 0.0) core.scale = 1.0;
    core.translation = mu_t - core.rotation * mu_s * core.scale;
  }

  // Full transform: denormalize(ref) applied after core after normalize(est).
  Sim3 norm_est;
  norm_est.scale = 1.0 / en.spread;
  norm_est.translation = norm_est.rotation * en.centroid * (-norm_est.scale);
  Sim3 denorm_ref;
  denorm_ref.scale = rn.spread;
  denorm_ref.translation = rn.centroid;
  const Sim3 full = denorm_ref.compose(core.compose(norm_est));

  TrajectoryMetrics m;
  m.alignment = full;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    const Mat3d r_est = geometry::axis_angle_to_matrix({estimated[i].rotation});
    const Mat3d r_ref = geometry::axis_angle_to_matrix({reference[i].rotation});
    const Mat3d r_aligned = full.rotation * r_est;
    const double dr = rotation_error_deg(r_aligned, r_ref);
    const double dt =
        translation_error(full.apply(estimated[i].translation),
                          reference[i].translation);
    m.per_image_rot_deg.push_back(dr);
    m.per_image_trans.push_back(dt);
    m.delta_r_deg += dr;
    m.delta_t += dt;
  }
  m.delta_r_deg /= static_cast<double>(estimated.size());
  m.delta_t /= static_cast<double>(estimated.size());
  return m;
}

}  // namespace incnerf::evaluation
