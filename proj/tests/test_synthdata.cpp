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
#include "incnerf/synthdata.hpp"

#include <cmath>
#include <doctest.h>
#include <filesystem>
#include <fstream>

#include "incnerf/evaluation.hpp"
#include "incnerf/rendering.hpp"

using namespace incnerf;
using namespace incnerf::synthdata;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

AnalyticScene two_blob_scene() {
  AnalyticScene s;
  s.blobs.push_back({{0.0, 0.0, 3.0}, 0.5, 4.0, {0.9, 0.1, 0.1}});
  s.blobs.push_back({{0.4, 0.0, 3.2}, 0.4, 2.0, {0.1, 0.2, 0.9}});
  return s;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("analytic field closed form") {
  const AnalyticScene s = two_blob_scene();
  // far away: negligible density
  CHECK(analytic_field(s, {50.0, 50.0, 50.0}, {0, 0, 1}).density < 1e-9);
  // at a lone blob center with the other blob far: peak density
  AnalyticScene lone;
  lone.blobs.push_back({{1.0, -2.0, 0.5}, 0.3, 5.5, {0.2, 0.8, 0.2}});
  const auto at_center = analytic_field(lone, {1.0, -2.0, 0.5}, {0, 0, 1});
  CHECK(at_center.density == doctest::Approx(5.5));
  CHECK(at_center.color.y == doctest::Approx(0.8));
  // two overlapping blobs: hand-computed sum and weighted color
  const Vec3d probe{0.2, 0.0, 3.1};
  double expected_density = 0.0;
  Vec3d expected_color{0, 0, 0};
  for (const GaussianBlob& b : s.blobs) {
    const double w = b.peak_density *
                     std::exp(-squared_norm(probe - b.center) /
                              (2.0 * b.radius * b.radius));
    expected_density += w;
    expected_color = expected_color + b.color * w;
  }
  expected_color = expected_color * (1.0 / expected_density);
  const auto got = analytic_field(s, probe, {0, 0, 1});
  CHECK(got.density == doctest::Approx(expected_density).epsilon(1e-12));
  CHECK(got.color.x == doctest::Approx(expected_color.x).epsilon(1e-12));
  // direction must not matter
  CHECK(analytic_field(s, probe, {1, 0, 0}).density == got.density);
}

TEST_CASE("forward trajectory is pure +z translation") {
  const GroundTruth gt = generate_trajectory(
      TrajectoryKind::kForward, 3, TrajectoryParams{0.1, 0, 0, 53.0, 480});
  REQUIRE(gt.poses.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(norm(gt.poses[i].rotation) == 0.0);
    CHECK(gt.poses[i].translation.z == doctest::Approx(0.1 * i));
    CHECK(gt.poses[i].translation.x == 0.0);
  }
  CHECK(gt.focal == doctest::Approx(geometry::focal_from_fov(53.0, 480)));
}

TEST_CASE("arc cameras look at the origin with the requested yaw step") {
  TrajectoryParams params;
  params.step_deg = 15.0;
  params.radius = 2.5;
  const GroundTruth gt = generate_trajectory(TrajectoryKind::kArc, 12, params);
  for (int i = 0; i < 12; ++i) {
    const Mat3d r = geometry::axis_angle_to_matrix({gt.poses[i].rotation});
    // principal ray: origin + t * R e_z passes through the world origin
    const Vec3d dir{r(0, 2), r(1, 2), r(2, 2)};
    const Vec3d o = gt.poses[i].translation;
    const Vec3d closest = o - dir * dot(o, dir);  // dir is unit
    CHECK(norm(closest) < 1e-9);
    CHECK(norm(o) == doctest::Approx(2.5));
    if (i > 0) {
      const Mat3d prev = geometry::axis_angle_to_matrix({gt.poses[i - 1].rotation});
      CHECK(evaluation::rotation_error_deg(prev, r) ==
            doctest::Approx(15.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("trajectory parameter validation") {
  CHECK_THROWS_AS(generate_trajectory(TrajectoryKind::kForward, 1, {}),
                  DomainError);
  TrajectoryParams bad;
  bad.step = -1.0;
  CHECK_THROWS_AS(generate_trajectory(TrajectoryKind::kForward, 3, bad),
                  DomainError);
  TrajectoryParams bad_arc;
  bad_arc.radius = 0.0;
  CHECK_THROWS_AS(generate_trajectory(TrajectoryKind::kArc, 3, bad_arc),
                  DomainError);
}

TEST_CASE("rendered datasets are deterministic and converge in oversample") {
  const AnalyticScene scene = two_blob_scene();
  TrajectoryParams params;
  params.step = 0.2;
  params.width = 8;
  const GroundTruth gt =
      generate_trajectory(TrajectoryKind::kForward, 2, params);
  const SceneDataset a = render_dataset(scene, gt, 8, 8, 256);
  const SceneDataset b = render_dataset(scene, gt, 8, 8, 256);
  CHECK(a.images[0] == b.images[0]);
  CHECK(a.images[1] == b.images[1]);

  const SceneDataset fine = render_dataset(scene, gt, 8, 8, 512);
  float max_diff = 0.0f;
  for (std::size_t i = 0; i < a.images[0].data.size(); ++i) {
    max_diff = std::max(max_diff,
                        std::abs(a.images[0].data[i] - fine.images[0].data[i]));
  }
  CHECK(max_diff < 1.0f / 1024.0f);
}

TEST_CASE("empty scene renders black") {
  AnalyticScene empty;
  TrajectoryParams params;
  params.width = 4;
  const GroundTruth gt = generate_trajectory(TrajectoryKind::kForward, 2, params);
  const SceneDataset ds = render_dataset(empty, gt, 4, 4, 64);
  for (float v : ds.images[0].data) CHECK(v == 0.0f);
}

TEST_CASE("rendering module and dataset generator agree on a known pose") {
  const AnalyticScene scene = two_blob_scene();
  TrajectoryParams params;
  params.width = 8;
  const GroundTruth gt = generate_trajectory(TrajectoryKind::kForward, 2, params);
  const SceneDataset ds = render_dataset(scene, gt, 8, 8, 256);
  auto field_at = [&scene](const Vec3d& p, const Vec3d& d) {
    return analytic_field(scene, p, d);
  };
  std::mt19937_64 rng(0);
  geometry::Intrinsics intr{gt.focal, 8, 8};
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const auto out = rendering::render_pixel_fn(
          field_at, gt.poses[1], intr, x + 0.5, y + 0.5,
          {0.1, 6.0, 256, false}, rng);
      const Vec3d ref = ds.images[1].rgb(x, y);
      CHECK(std::abs(out.color.x - ref.x) < 2.0 / 255.0);
      CHECK(std::abs(out.color.y - ref.y) < 2.0 / 255.0);
      CHECK(std::abs(out.color.z - ref.z) < 2.0 / 255.0);
    }
  }
}

TEST_CASE("dataset save/load round trip is bit exact") {
  const AnalyticScene scene = two_blob_scene();
  TrajectoryParams params;
  params.width = 8;
  const GroundTruth gt = generate_trajectory(TrajectoryKind::kArc, 3, params);
  SceneDataset ds = render_dataset(scene, gt, 8, 6, 64);
  ds.trajectory_kind = "arc";
  TempDir dir("incnerf_ds_roundtrip");
  save_dataset(dir.path.string(), ds);
  const SceneDataset back = load_dataset(dir.path.string());
  CHECK(back.width == ds.width);
  CHECK(back.height == ds.height);
  CHECK(back.trajectory_kind == "arc");
  REQUIRE(back.images.size() == ds.images.size());
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    CHECK(back.images[i] == ds.images[i]);
  }
  REQUIRE(back.ground_truth.has_value());
  CHECK(back.ground_truth->focal == ds.ground_truth->focal);
  for (std::size_t i = 0; i < gt.poses.size(); ++i) {
    CHECK(back.ground_truth->poses[i].rotation.y ==
          gt.poses[i].rotation.y);
    CHECK(back.ground_truth->poses[i].translation.x ==
          gt.poses[i].translation.x);
  }
}

TEST_CASE("dataset without ground truth loads with it absent") {
  SceneDataset ds;
  ds.width = 4;
  ds.height = 4;
  ds.trajectory_kind = "imported";
  ds.images.emplace_back(4, 4, 0.25f);
  TempDir dir("incnerf_ds_nogt");
  save_dataset(dir.path.string(), ds);
  const SceneDataset back = load_dataset(dir.path.string());
  CHECK_FALSE(back.ground_truth.has_value());
  CHECK(back.images[0] == ds.images[0]);
}

TEST_CASE("truncated image file raises FormatError, not a crash") {
  SceneDataset ds;
  ds.width = 8;
  ds.height = 8;
  ds.trajectory_kind = "x";
  ds.images.emplace_back(8, 8, 0.5f);
  TempDir dir("incnerf_ds_trunc");
  save_dataset(dir.path.string(), ds);
  std::filesystem::resize_file(dir.path / "image_0000.bin", 100);
  CHECK_THROWS_AS(load_dataset(dir.path.string()), FormatError);
}

TEST_CASE("manifest with a bad field raises FormatError naming it") {
  TempDir dir("incnerf_ds_badmanifest");
  std::ofstream(dir.path / "manifest.txt") << "width 4\nheight 4\n";
  try {
    load_dataset(dir.path.string());
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("count") != std::string::npos);
  }
}

TEST_CASE("ppm round trip through import") {
  TempDir dir("incnerf_ppm");
  Image img(4, 2);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    img.data[i] = static_cast<float>(i) / (img.data.size() - 1);
  }
  write_ppm((dir.path / "frame_000.ppm").string(), img);
  write_ppm((dir.path / "frame_001.ppm").string(), img);
  const SceneDataset ds = import_ppm_dir(dir.path.string());
  REQUIRE(ds.images.size() == 2);
  CHECK(ds.width == 4);
  CHECK(ds.height == 2);
  CHECK_FALSE(ds.ground_truth.has_value());
  // 8-bit quantization bound
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    CHECK(std::abs(ds.images[0].data[i] - img.data[i]) <= 0.5f / 255.0f + 1e-6f);
  }
}
