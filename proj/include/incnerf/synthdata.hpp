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
#ifndef INCNERF_SYNTHDATA_HPP_
#define INCNERF_SYNTHDATA_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "incnerf/field.hpp"
#include "incnerf/geometry.hpp"
#include "incnerf/image.hpp"

namespace incnerf::synthdata {

struct GaussianBlob {
  Vec3d center{};
  double radius = 1.0;
  double peak_density = 1.0;
  Vec3d color{0.5, 0.5, 0.5};
};

/// Smooth analytic scene: a sum of Gaussian density blobs with
/// density-weighted Lambertian colors. Ground truth for every test that
/// needs a field with a closed form.
struct AnalyticScene {
  std::vector<GaussianBlob> blobs;
};

/// density = sum_k peak_k exp(-|x-c_k|^2 / (2 r_k^2));
/// color = density-weighted blob colors (mid gray when nothing is near).
field::FieldSample analytic_field(const AnalyticScene& scene, const Vec3d& position,
                                  const Vec3d& view_dir);

struct GroundTruth {
  std::vector<geometry::CameraPose> poses;
  double focal = 0.0;
};

struct SceneDataset {
  std::vector<Image> images;
  int width = 0;
  int height = 0;
  std::optional<GroundTruth> ground_truth;
  std::string trajectory_kind;

  geometry::Intrinsics intrinsics() const {
    return geometry::Intrinsics{ground_truth ? ground_truth->focal : 0.0,
                                width, height};
  }
};

enum class TrajectoryKind { kForward, kArc };

struct TrajectoryParams {
  double step = 0.25;        // forward: translation per image (world units)
  double step_deg = 15.0;    // arc: yaw per image (degrees)
  double radius = 2.5;       // arc: circle radius
  double fov_deg = 53.0;     // sets the ground-truth focal
  int width = 32;
};

/// forward: translations along +z, zero rotation. arc: cameras on a circle
/// in the xz-plane looking at the origin, stepping in yaw.
GroundTruth generate_trajectory(TrajectoryKind kind, int count,
                                const TrajectoryParams& params);

/// Renders every pose with deterministic midpoint sampling at `oversample`
/// samples per ray and stores the generating poses as ground truth.
SceneDataset render_dataset(const AnalyticScene& scene, const GroundTruth& gt,
                            int width, int height, int oversample = 1024,
                            double t_near = 0.1, double t_far = 6.0);

/// Seeded blob arrangement for the two trajectory kinds: blobs sit around
/// the origin for arcs and ahead of the camera path for forward scenes.
AnalyticScene random_scene(TrajectoryKind kind, int blob_count,
                           std::uint64_t seed);

/// Directory format: manifest.txt (key value per line), poses.txt
/// ("index wx wy wz tx ty tz" per line, ground truth only) and one
/// image_NNNN.bin of float32 planes (R, G, B; row-major) per image.
void save_dataset(const std::string& dir, const SceneDataset& dataset);
SceneDataset load_dataset(const std::string& dir);

/// Imports a directory of 8-bit binary PPMs (sorted by filename) with an
/// optional poses.txt + focal.txt pair providing ground truth.
SceneDataset import_ppm_dir(const std::string& dir);

void write_ppm(const std::string& path, const Image& image);

}  // namespace incnerf::synthdata

#endif  // INCNERF_SYNTHDATA_HPP_
