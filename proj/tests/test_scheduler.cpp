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
#include "incnerf/scheduler.hpp"

#include <cmath>
#include <doctest.h>
#include <filesystem>

using namespace incnerf;
using namespace incnerf::scheduler;

namespace {

synthdata::SceneDataset tiny_dataset(int count, int size = 8) {
  synthdata::AnalyticScene scene =
      synthdata::random_scene(synthdata::TrajectoryKind::kForward, 4, 7);
  synthdata::TrajectoryParams params;
  params.step = 0.25;
  params.width = size;
  const synthdata::GroundTruth gt =
      synthdata::generate_trajectory(synthdata::TrajectoryKind::kForward, count, params);
  synthdata::SceneDataset ds =
      synthdata::render_dataset(scene, gt, size, size, 128);
  ds.trajectory_kind = "forward";
  return ds;
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.schedule = ScheduleConfig{2, 2, 2, 3, 2, 2};
  cfg.field = field::FieldConfig{2, 6, 30.0, 3};
  cfg.sampling = rendering::SamplingConfig{0.1, 4.0, 4, true};
  cfg.rays_per_batch = 4;
  cfg.seed = 5;
  cfg.eval_rays_per_image = 8;
  return cfg;
}

}  // namespace

TEST_CASE("incremental run visits phases in order and registers a prefix") {
  const synthdata::SceneDataset ds = tiny_dataset(6);
  const TrainConfig cfg = tiny_config();
  TrainState state(cfg, 6, 10.0);
  initialize(state, ds.images, cfg);
  REQUIRE(state.registered == std::vector<int>{0});
  run_incremental(state, ds.images, cfg);
  CHECK(state.registered == std::vector<int>{0, 1, 2, 3, 4, 5});

  REQUIRE(state.log.size() >= 3);
  CHECK(state.log[0].phase == "initialize");
  std::size_t k = 1;
  for (int img = 1; img < 6; ++img) {
    REQUIRE(state.log[k].phase == "localize");
    CHECK(state.log[k].image_index == img);
    ++k;
    REQUIRE(state.log[k].phase == "partial");
    ++k;
    if ((img + 1) % cfg.schedule.n_glob == 0) {
      REQUIRE(state.log[k].phase == "global");
      ++k;
    }
  }
  CHECK(k == state.log.size());
}

TEST_CASE("global trigger fires exactly on divisibility of |E|") {
  const synthdata::SceneDataset ds = tiny_dataset(6);
  TrainConfig cfg = tiny_config();
  cfg.schedule.n_glob = 5;
  cfg.schedule.n_init = 3;
  TrainState state(cfg, 6, 10.0);
  initialize(state, ds.images, cfg);
  run_incremental(state, ds.images, cfg);
  std::vector<int> glob_at;
  int registered = 1;
  for (const PhaseRecord& r : state.log) {
    if (r.phase == "localize") ++registered;
    if (r.phase == "global") glob_at.push_back(registered);
  }
  CHECK(glob_at == std::vector<int>{5});
}

TEST_CASE("localization starts from the previous pose when lr is zero") {
  const synthdata::SceneDataset ds = tiny_dataset(4);
  TrainConfig cfg = tiny_config();
  cfg.optim.theta_schedule.base = 0.0;
  cfg.optim.delta_schedule.base = 0.0;
  TrainState state(cfg, 4, 10.0);
  initialize(state, ds.images, cfg);
  // give image 0 a recognizable pose
  state.store.set_pose(0, {{0.0, 0.0, 0.0}, {0.25, -0.5, 0.75}});
  localize(state, ds.images, cfg, 1);
  const geometry::CameraPose p0 = state.store.pose(0);
  const geometry::CameraPose p1 = state.store.pose(1);
  CHECK(p1.translation.x == p0.translation.x);
  CHECK(p1.translation.y == p0.translation.y);
  CHECK(p1.translation.z == p0.translation.z);
  CHECK(p1.rotation.x == p0.rotation.x);
}

TEST_CASE("localize must target max(E)+1") {
  const synthdata::SceneDataset ds = tiny_dataset(4);
  const TrainConfig cfg = tiny_config();
  TrainState state(cfg, 4, 10.0);
  initialize(state, ds.images, cfg);
  CHECK_THROWS_AS(localize(state, ds.images, cfg, 2), DomainError);
  CHECK_THROWS_AS(localize(state, ds.images, cfg, 0), DomainError);
}

TEST_CASE("initialization freezes rotations and registers image 0 only") {
  const synthdata::SceneDataset ds = tiny_dataset(5);
  TrainConfig cfg = tiny_config();
  cfg.schedule.n_init = 3;
  cfg.schedule.xi_init = 10;
  TrainState state(cfg, 5, 10.0);
  initialize(state, ds.images, cfg);
  CHECK(state.registered == std::vector<int>{0});
  for (int i = 0; i < 5; ++i) {
    CHECK(norm(state.store.pose(i).rotation) == 0.0);
  }
  // warm-up translations of images 1..n_init-1 are discarded
  CHECK(norm(state.store.pose(1).translation) == 0.0);
  CHECK(norm(state.store.pose(2).translation) == 0.0);
  // image 0's translation was optimized and kept
  CHECK(state.total_steps == 10);
  CHECK_THROWS_AS(initialize(state, ds.images, cfg), DomainError);
}

TEST_CASE("initialization reduces the photometric loss on image 0") {
  const synthdata::SceneDataset ds = tiny_dataset(3);
  TrainConfig cfg = tiny_config();
  cfg.schedule = ScheduleConfig{3, 2, 2, 400, 2, 1};
  cfg.field = field::FieldConfig{2, 8, 30.0, 3};
  cfg.sampling = rendering::SamplingConfig{0.1, 4.0, 8, true};
  cfg.rays_per_batch = 8;
  TrainState state(cfg, 3, geometry::focal_from_fov(53.0, 8));
  const std::vector<int> first{0};
  const double before = eval_loss(state, ds.images, first, cfg);
  initialize(state, ds.images, cfg);
  const double after = eval_loss(state, ds.images, first, cfg);
  CHECK(after < before);
  CHECK(state.log[0].loss_end < state.log[0].loss_start);
}

TEST_CASE("phase isolation is bitwise") {
  const synthdata::SceneDataset ds = tiny_dataset(6);
  TrainConfig cfg = tiny_config();
  cfg.schedule.n_part = 2;
  TrainState state(cfg, 6, 10.0);
  initialize(state, ds.images, cfg);
  localize(state, ds.images, cfg, 1);
  partial_optimize(state, ds.images, cfg);
  localize(state, ds.images, cfg, 2);
  partial_optimize(state, ds.images, cfg);

  // localize leaves theta and the focal bit-identical
  const std::vector<double> theta_before = state.store.field.theta;
  const double focal_before = state.store.focal();
  localize(state, ds.images, cfg, 3);
  CHECK(state.store.field.theta == theta_before);
  CHECK(state.store.focal() == focal_before);

  // partial with n_part=2 touches images {2,3} only; 0,1 stay bitwise
  const geometry::CameraPose p0 = state.store.pose(0);
  const geometry::CameraPose p1 = state.store.pose(1);
  partial_optimize(state, ds.images, cfg);
  CHECK(state.store.focal() == focal_before);
  const geometry::CameraPose p0_after = state.store.pose(0);
  const geometry::CameraPose p1_after = state.store.pose(1);
  CHECK(p0.translation.x == p0_after.translation.x);
  CHECK(p0.rotation.y == p0_after.rotation.y);
  CHECK(p1.translation.z == p1_after.translation.z);
  CHECK(p1.rotation.x == p1_after.rotation.x);
  // and the window itself moved
  CHECK(state.store.pose(3).translation.z != 0.0);
}

TEST_CASE("budget accounting matches the closed form") {
  for (int count : {4, 6, 10}) {
    for (int n_glob : {2, 5}) {
      const synthdata::SceneDataset ds = tiny_dataset(count);
      TrainConfig cfg = tiny_config();
      cfg.schedule.n_glob = n_glob;
      cfg.schedule.pyramid_depth = 2;
      const TrainState state = coarse_to_fine(ds, cfg);
      CHECK(state.total_steps ==
            planned_total_epochs(count, cfg.schedule));
    }
  }
}

TEST_CASE("depth-1 coarse_to_fine equals a manual incremental run") {
  const synthdata::SceneDataset ds = tiny_dataset(5);
  TrainConfig cfg = tiny_config();
  cfg.schedule.pyramid_depth = 1;
  const TrainState via_ctf = coarse_to_fine(ds, cfg);

  TrainState manual(cfg, 5, geometry::focal_from_fov(cfg.init_fov_deg, 8));
  initialize(manual, ds.images, cfg);
  run_incremental(manual, ds.images, cfg);

  CHECK(via_ctf.store.delta == manual.store.delta);
  CHECK(via_ctf.store.field.theta == manual.store.field.theta);
  CHECK(via_ctf.total_steps == manual.total_steps);
}

TEST_CASE("focal doubles exactly at each pyramid level transition") {
  const synthdata::SceneDataset ds = tiny_dataset(4, 16);
  TrainConfig cfg = tiny_config();
  cfg.schedule.pyramid_depth = 3;
  std::vector<double> focal_at_level_end;
  const TrainState state = coarse_to_fine(
      ds, cfg, [&](int, const TrainState& s) {
        focal_at_level_end.push_back(s.store.focal());
      });
  REQUIRE(focal_at_level_end.size() == 3);
  // find the first phase of each level in the log and check its focal_start
  for (int level = 1; level < 3; ++level) {
    for (const PhaseRecord& r : state.log) {
      if (r.level == level) {
        CHECK(r.focal_start == 2.0 * focal_at_level_end[level - 1]);
        break;
      }
    }
  }
  // level images double in resolution, so the initial focal comes from the
  // coarsest width
  CHECK(state.log[0].focal_start ==
        geometry::focal_from_fov(cfg.init_fov_deg, 4));
}

TEST_CASE("joint baseline matches the incremental budget and skips phases") {
  const synthdata::SceneDataset ds = tiny_dataset(5);
  TrainConfig cfg = tiny_config();
  const TrainState state = joint_baseline(ds, cfg);
  REQUIRE(state.log.size() == 1);
  CHECK(state.log[0].phase == "joint");
  CHECK(state.total_steps == planned_total_epochs(5, cfg.schedule));
  CHECK(state.registered.size() == 5);
}

TEST_CASE("a poisoned field weight surfaces as DivergedError") {
  const synthdata::SceneDataset ds = tiny_dataset(4);
  const TrainConfig cfg = tiny_config();
  TrainState state(cfg, 4, 10.0);
  initialize(state, ds.images, cfg);
  state.store.field.theta[0] = std::nan("");
  try {
    localize(state, ds.images, cfg, 1);
    FAIL("expected DivergedError");
  } catch (const DivergedError& e) {
    CHECK(e.phase() == "localize");
    CHECK(e.image_index() == 1);
  }
}

TEST_CASE("run_incremental requires an initialized state") {
  const synthdata::SceneDataset ds = tiny_dataset(4);
  const TrainConfig cfg = tiny_config();
  TrainState state(cfg, 4, 10.0);
  CHECK_THROWS_AS(run_incremental(state, ds.images, cfg), DomainError);
}

TEST_CASE("identical seeds give bitwise identical runs") {
  const synthdata::SceneDataset ds = tiny_dataset(4);
  TrainConfig cfg = tiny_config();
  cfg.seed = 123;
  const TrainState a = coarse_to_fine(ds, cfg);
  const TrainState b = coarse_to_fine(ds, cfg);
  CHECK(a.store.delta == b.store.delta);
  CHECK(a.store.field.theta == b.store.field.theta);
  TrainConfig cfg2 = cfg;
  cfg2.seed = 124;
  const TrainState c = coarse_to_fine(ds, cfg2);
  CHECK(a.store.delta != c.store.delta);
}

TEST_CASE("a second worker thread stays within reduction tolerance") {
  const synthdata::SceneDataset ds = tiny_dataset(3);
  TrainConfig cfg = tiny_config();
  cfg.schedule.n_init = 3;
  cfg.schedule.xi_init = 6;
  cfg.rays_per_batch = 16;
  TrainState one(cfg, 3, 10.0);
  initialize(one, ds.images, cfg);
  cfg.threads = 2;
  TrainState two(cfg, 3, 10.0);
  initialize(two, ds.images, cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < one.store.delta.size(); ++i) {
    worst = std::max(worst, std::abs(one.store.delta[i] - two.store.delta[i]));
  }
  for (std::size_t i = 0; i < one.store.field.theta.size(); ++i) {
    worst = std::max(
        worst, std::abs(one.store.field.theta[i] - two.store.field.theta[i]));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("run log round trips through the jsonl file") {
  const synthdata::SceneDataset ds = tiny_dataset(4);
  const TrainConfig cfg = tiny_config();
  TrainState state(cfg, 4, 10.0);
  initialize(state, ds.images, cfg);
  localize(state, ds.images, cfg, 1);
  const std::string path = "sched_log_test.jsonl";
  write_run_log(path, state.log);
  const auto back = read_run_log(path);
  REQUIRE(back.size() == state.log.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].phase == state.log[i].phase);
    CHECK(back[i].image_index == state.log[i].image_index);
    CHECK(back[i].epochs == state.log[i].epochs);
    CHECK(back[i].loss_end == state.log[i].loss_end);
  }
  std::filesystem::remove(path);
}

TEST_CASE("schedule config validation") {
  ScheduleConfig bad;
  bad.n_init = 1;
  CHECK_THROWS_AS(validate(bad), DomainError);
  bad = ScheduleConfig{};
  bad.xi = 0;
  CHECK_THROWS_AS(validate(bad), DomainError);
  bad = ScheduleConfig{};
  bad.n_glob = 0;
  CHECK_THROWS_AS(validate(bad), DomainError);
}
