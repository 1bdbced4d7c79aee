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
#ifndef INCNERF_SCHEDULER_HPP_
#define INCNERF_SCHEDULER_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "incnerf/autodiff.hpp"
#include "incnerf/field.hpp"
#include "incnerf/geometry.hpp"
#include "incnerf/image.hpp"
#include "incnerf/rendering.hpp"
#include "incnerf/synthdata.hpp"

namespace incnerf::scheduler {

/// The incremental training schedule: how many images seed the warm-up, the
/// partial-window width, the global-refinement cadence, the per-phase
/// iteration budgets, and the pyramid depth.
struct ScheduleConfig {
  int n_init = 3;
  int n_part = 3;
  int n_glob = 5;
  int xi_init = 3000;
  int xi = 900;  // shared by localization, partial, global and per-level refinement
  int pyramid_depth = 3;
};

struct OptimConfig {
  ad::LrSchedule theta_schedule{1e-3, 0.9954, 200};
  ad::LrSchedule delta_schedule{1e-3, 0.9000, 2000};
  ad::AdamConfig adam{};
  double loss_beta = 1.0;
};

struct TrainConfig {
  ScheduleConfig schedule;
  OptimConfig optim;
  field::FieldConfig field;
  rendering::SamplingConfig sampling{0.1, 6.0, 64, true};
  int rays_per_batch = 1024;
  std::uint64_t seed = 0;
  int threads = 1;
  double init_fov_deg = 53.0;      // seeds the focal estimate
  int eval_rays_per_image = 128;   // fixed ray set for phase start/end loss
};

/// One line of the structured run log.
struct PhaseRecord {
  std::string phase;  // initialize | localize | partial | global | joint
  int image_index = -1;
  int level = 0;
  int epochs = 0;
  double loss_start = 0.0;
  double loss_end = 0.0;
  double focal_start = 0.0;
  double focal_end = 0.0;
  double wall_seconds = 0.0;
};

/// All learnable scalars. Camera parameters live in one flat vector so the
/// optimizer can address them by slot: image i owns [6i, 6i+6) as
/// (wx wy wz tx ty tz), the shared focal sits at 6*image_count.
struct ParameterStore {
  field::RadianceField field;
  std::vector<double> delta;
  int image_count = 0;

  // learnability of the most recent phase, for introspection
  bool theta_learnable = false;
  bool focal_learnable = false;
  std::vector<std::uint8_t> pose_learnable;

  ParameterStore(const field::FieldConfig& cfg, std::uint64_t seed, int images)
      : field(field::init_field(cfg, seed)),
        delta(static_cast<std::size_t>(images) * 6 + 1, 0.0),
        image_count(images),
        pose_learnable(images, 0) {}

  double focal() const { return delta[static_cast<std::size_t>(image_count) * 6]; }
  double& focal_slot() { return delta[static_cast<std::size_t>(image_count) * 6]; }

  geometry::CameraPose pose(int i) const {
    const double* d = delta.data() + static_cast<std::size_t>(i) * 6;
    return {{d[0], d[1], d[2]}, {d[3], d[4], d[5]}};
  }
  void set_pose(int i, const geometry::CameraPose& p) {
    double* d = delta.data() + static_cast<std::size_t>(i) * 6;
    d[0] = p.rotation.x;
    d[1] = p.rotation.y;
    d[2] = p.rotation.z;
    d[3] = p.translation.x;
    d[4] = p.translation.y;
    d[5] = p.translation.z;
  }
  std::vector<geometry::CameraPose> all_poses() const {
    std::vector<geometry::CameraPose> out;
    out.reserve(image_count);
    for (int i = 0; i < image_count; ++i) out.push_back(pose(i));
    return out;
  }
};

struct TrainState {
  ParameterStore store;
  std::vector<int> registered;  // E: always a prefix of the sequence order
  ad::AdamState adam_theta;
  ad::AdamState adam_delta;
  int level = 0;
  std::int64_t total_steps = 0;
  std::vector<PhaseRecord> log;
  std::mt19937_64 rng;

  TrainState(const TrainConfig& cfg, int images, double initial_focal)
      : store(cfg.field, cfg.seed, images),
        adam_theta(store.field.theta.size()),
        adam_delta(store.delta.size()),
        rng(cfg.seed) {
    store.focal_slot() = initial_focal;
  }
};

void validate(const ScheduleConfig& config);

/// Exact number of optimizer steps the incremental pipeline spends on
/// `image_count` images (used by the joint baseline to match budgets).
std::int64_t planned_total_epochs(int image_count, const ScheduleConfig& cfg);

/// Mean Smooth-L1 loss over a fixed, deterministic evaluation ray set of the
/// given images (midpoint sampling; independent of the training RNG).
double eval_loss(const TrainState& state, std::span<const Image> images,
                 std::span<const int> image_indices, const TrainConfig& cfg);

/// Warm-up on the first n_init images: optimizes theta, their translations
/// and the focal (rotations stay zero), then registers image 0 and resets
/// the other warm-up poses.
void initialize(TrainState& state, std::span<const Image> images,
                const TrainConfig& cfg);

/// Pose-only photometric registration of image n against the frozen field,
/// starting from image n-1's pose. Appends n to E.
void localize(TrainState& state, std::span<const Image> images,
              const TrainConfig& cfg, int image_index);

/// Joint refinement of theta and the most recent min(n_part, |E|) poses;
/// focal and every pose outside the window stay untouched.
void partial_optimize(TrainState& state, std::span<const Image> images,
                      const TrainConfig& cfg);

/// Joint refinement of theta, every registered pose, and the focal.
void global_optimize(TrainState& state, std::span<const Image> images,
                     const TrainConfig& cfg, int epochs_override = -1);

/// localize -> partial -> (global when |E| divides n_glob) until every
/// image is registered. Requires an initialized state.
void run_incremental(TrainState& state, std::span<const Image> images,
                     const TrainConfig& cfg);

using LevelObserver = std::function<void(int level, const TrainState&)>;

/// Full coarse-to-fine pipeline: the incremental schedule runs on the
/// coarsest pyramid level, then each finer level gets one global refinement
/// (focal doubles per level, since it is measured in pixels).
/// `observer`, when set, fires after each level completes.
TrainState coarse_to_fine(const synthdata::SceneDataset& dataset,
                          const TrainConfig& cfg,
                          const LevelObserver& observer = {});

/// All-at-once baseline: every pose, the focal and theta optimized jointly
/// from zero-initialized cameras at full resolution, for the same total
/// epoch budget the incremental pipeline would spend.
TrainState joint_baseline(const synthdata::SceneDataset& dataset,
                          const TrainConfig& cfg);

void write_run_log(const std::string& path, std::span<const PhaseRecord> log);
std::vector<PhaseRecord> read_run_log(const std::string& path);

}  // namespace incnerf::scheduler

#endif  // INCNERF_SCHEDULER_HPP_
