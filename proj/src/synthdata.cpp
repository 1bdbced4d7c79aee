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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "incnerf/rendering.hpp"

namespace incnerf::synthdata {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

std::string image_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "image_%04d.bin", index);
  return buf;
}

void write_planes(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  const std::size_t n = img.pixel_count();
  std::vector<float> plane(n);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        plane[static_cast<std::size_t>(y) * img.width + x] = img.at(x, y, c);
    out.write(reinterpret_cast<const char*>(plane.data()),
              static_cast<std::streamsize>(n * sizeof(float)));
  }
  if (!out) throw IoError("write failed: " + path);
}

Image read_planes(const std::string& path, int width, int height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for read: " + path);
  Image img(width, height);
  const std::size_t n = img.pixel_count();
  std::vector<float> plane(n);
  for (int c = 0; c < 3; ++c) {
    in.read(reinterpret_cast<char*>(plane.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float)) {
      throw FormatError("truncated image plane in " + path);
    }
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        img.at(x, y, c) = plane[static_cast<std::size_t>(y) * width + x];
  }
  return img;
}

std::vector<geometry::CameraPose> read_poses(const std::string& path,
                                             int expected_count) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for read: " + path);
  std::vector<geometry::CameraPose> poses;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int idx;
    geometry::CameraPose p;
    if (!(ss >> idx >> p.rotation.x >> p.rotation.y >> p.rotation.z >>
          p.translation.x >> p.translation.y >> p.translation.z)) {
      throw FormatError("poses: malformed line '" + line + "'");
    }
    if (idx != static_cast<int>(poses.size())) {
      throw FormatError("poses: out-of-order index " + std::to_string(idx));
    }
    poses.push_back(p);
  }
  if (expected_count >= 0 && static_cast<int>(poses.size()) != expected_count) {
    throw FormatError("poses: count mismatch, expected " +
                      std::to_string(expected_count));
  }
  return poses;
}

}  // namespace

field::FieldSample analytic_field(const AnalyticScene& scene,
                                  const Vec3d& position,
                                  const Vec3d& /*view_dir*/) {
  double density = 0.0;
  Vec3d color{0.0, 0.0, 0.0};
  for (const GaussianBlob& b : scene.blobs) {
    const Vec3d d = position - b.center;
    const double w =
        b.peak_density * std::exp(-squared_norm(d) / (2.0 * b.radius * b.radius));
    density += w;
    color = color + b.color * w;
  }
  if (density < 1e-12) return {{0.5, 0.5, 0.5}, density};
  return {color * (1.0 / density), density};
}

GroundTruth generate_trajectory(TrajectoryKind kind, int count,
                                const TrajectoryParams& params) {
  if (count < 2) throw DomainError("generate_trajectory: count must be >= 2");
  GroundTruth gt;
  gt.focal = geometry::focal_from_fov(params.fov_deg, params.width);
  gt.poses.resize(count);
  if (kind == TrajectoryKind::kForward) {
    if (!(params.step > 0.0)) {
      throw DomainError("generate_trajectory: forward step must be > 0");
    }
    for (int i = 0; i < count; ++i) {
      gt.poses[i].rotation = {0.0, 0.0, 0.0};
      gt.poses[i].translation = {0.0, 0.0, params.step * i};
    }
    return gt;
  }
  if (!(params.radius > 0.0) || params.step_deg == 0.0) {
    throw DomainError("generate_trajectory: arc needs radius > 0, step != 0");
  }
  for (int i = 0; i < count; ++i) {
    const double yaw = params.step_deg * i * kPi / 180.0;
    // Camera i looks at the origin from R_y(yaw) * (0,0,-radius).
    gt.poses[i].rotation = {0.0, yaw, 0.0};
    const Mat3d r = geometry::rotation_from_axis_angle<double>(gt.poses[i].rotation);
    gt.poses[i].translation = r * Vec3d{0.0, 0.0, -params.radius};
  }
  return gt;
}

SceneDataset render_dataset(const AnalyticScene& scene, const GroundTruth& gt,
                            int width, int height, int oversample,
                            double t_near, double t_far) {
  SceneDataset ds;
  ds.width = width;
  ds.height = height;
  ds.ground_truth = gt;
  rendering::SamplingConfig sampling{t_near, t_far, oversample, false};
  geometry::Intrinsics intr{gt.focal, width, height};
  std::mt19937_64 rng(0);  // unused: sampling is deterministic midpoints
  auto field_at = [&scene](const Vec3d& p, const Vec3d& d) {
    return analytic_field(scene, p, d);
  };
  for (const geometry::CameraPose& pose : gt.poses) {
    Image img(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const rendering::RenderOutput out = rendering::render_pixel_fn(
            field_at, pose, intr, x + 0.5, y + 0.5, sampling, rng);
        img.set_rgb(x, y, out.color);
      }
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

AnalyticScene random_scene(TrajectoryKind kind, int blob_count,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  };
  // Distinct hues spaced around the color wheel, lightly jittered.
  auto palette_color = [&](int i) {
    const double hue = std::fmod(i / static_cast<double>(blob_count) +
                                     uniform(-0.03, 0.03) + 1.0,
                                 1.0);
    const double h6 = hue * 6.0;
    auto channel = [&](double shift) {
      const double k = std::fmod(h6 + shift, 6.0);
      return std::clamp(1.0 - std::abs(k - 3.0) + 0.5, 0.15, 0.95);
    };
    return Vec3d{channel(0.0), channel(4.0), channel(2.0)};
  };
  AnalyticScene scene;
  for (int i = 0; i < blob_count; ++i) {
    GaussianBlob b;
    if (kind == TrajectoryKind::kArc) {
      b.center = {uniform(-0.7, 0.7), uniform(-0.7, 0.7), uniform(-0.7, 0.7)};
    } else {
      b.center = {uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(2.5, 4.5)};
    }
    b.radius = uniform(0.25, 0.5);
    b.peak_density = uniform(3.0, 8.0);
    b.color = palette_color(i);
    scene.blobs.push_back(b);
  }
  return scene;
}

void save_dataset(const std::string& dir, const SceneDataset& dataset) {
  fs::create_directories(dir);
  {
    std::ofstream m(dir + "/manifest.txt");
    if (!m) throw IoError("cannot write manifest in " + dir);
    m << "width " << dataset.width << "\n";
    m << "height " << dataset.height << "\n";
    m << "count " << dataset.images.size() << "\n";
    m << "kind " << (dataset.trajectory_kind.empty() ? "unknown"
                                                     : dataset.trajectory_kind)
      << "\n";
    if (dataset.ground_truth) {
      m.precision(17);
      m << "focal " << dataset.ground_truth->focal << "\n";
    }
  }
  if (dataset.ground_truth) {
    std::ofstream p(dir + "/poses.txt");
    if (!p) throw IoError("cannot write poses in " + dir);
    p.precision(17);
    for (std::size_t i = 0; i < dataset.ground_truth->poses.size(); ++i) {
      const geometry::CameraPose& c = dataset.ground_truth->poses[i];
      p << i << " " << c.rotation.x << " " << c.rotation.y << " "
        << c.rotation.z << " " << c.translation.x << " " << c.translation.y
        << " " << c.translation.z << "\n";
    }
  }
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    write_planes(dir + "/" + image_name(static_cast<int>(i)),
                 dataset.images[i]);
  }
}

SceneDataset load_dataset(const std::string& dir) {
  std::ifstream m(dir + "/manifest.txt");
  if (!m) throw IoError("cannot open manifest in " + dir);
  std::map<std::string, std::string> kv;
  std::string key, value;
  while (m >> key >> value) kv[key] = value;
  auto require = [&kv](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw FormatError("manifest: missing field '" + k + "'");
    return it->second;
  };
  SceneDataset ds;
  try {
    ds.width = std::stoi(require("width"));
    ds.height = std::stoi(require("height"));
  } catch (const std::logic_error&) {
    throw FormatError("manifest: width/height not integers");
  }
  if (ds.width <= 0 || ds.height <= 0) {
    throw FormatError("manifest: width/height must be positive");
  }
  int count = 0;
  try {
    count = std::stoi(require("count"));
  } catch (const std::logic_error&) {
    throw FormatError("manifest: count not an integer");
  }
  ds.trajectory_kind = require("kind");
  if (kv.count("focal")) {
    GroundTruth gt;
    try {
      gt.focal = std::stod(kv["focal"]);
    } catch (const std::logic_error&) {
      throw FormatError("manifest: focal not a number");
    }
    gt.poses = read_poses(dir + "/poses.txt", count);
    ds.ground_truth = std::move(gt);
  }
  for (int i = 0; i < count; ++i) {
    ds.images.push_back(read_planes(dir + "/" + image_name(i), ds.width,
                                    ds.height));
  }
  return ds;
}

SceneDataset import_ppm_dir(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".ppm") files.push_back(e.path());
  }
  if (files.empty()) throw FormatError("import_ppm_dir: no .ppm files in " + dir);
  std::sort(files.begin(), files.end());
  SceneDataset ds;
  ds.trajectory_kind = "imported";
  for (const fs::path& p : files) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::string magic;
    int w, h, maxval;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255) {
      throw FormatError("import_ppm_dir: expected binary P6/255 in " +
                        p.string());
    }
    in.get();  // single whitespace after header
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw FormatError("import_ppm_dir: truncated pixel data in " + p.string());
    }
    if (ds.images.empty()) {
      ds.width = w;
      ds.height = h;
    } else if (w != ds.width || h != ds.height) {
      throw FormatError("import_ppm_dir: image dimensions differ in " +
                        p.string());
    }
    Image img(w, h);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      img.data[i] = static_cast<float>(raw[i]) / 255.0f;
    }
    ds.images.push_back(std::move(img));
  }
  const fs::path poses = fs::path(dir) / "poses.txt";
  const fs::path focal = fs::path(dir) / "focal.txt";
  if (fs::exists(poses) && fs::exists(focal)) {
    GroundTruth gt;
    std::ifstream f(focal);
    if (!(f >> gt.focal) || !(gt.focal > 0.0)) {
      throw FormatError("import_ppm_dir: focal.txt must hold one positive number");
    }
    gt.poses = read_poses(poses.string(), static_cast<int>(ds.images.size()));
    ds.ground_truth = std::move(gt);
  }
  return ds;
}

void write_ppm(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<unsigned char> raw(image.data.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const float v = std::clamp(image.data[i], 0.0f, 1.0f);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace incnerf::synthdata
