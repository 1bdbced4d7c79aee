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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace incnerf::scheduler {

namespace {

using nlohmann::json;

struct PhaseSpec {
  std::string name;
  std::vector<int> active_images;  // pixels are sampled from these
  bool train_rotations = true;
  bool train_theta = true;
  bool train_focal = false;
  int epochs = 0;
  int log_image_index = -1;
};

/// One ray assignment drawn ahead of the parallel section so results do not
/// depend on thread interleaving.
struct RayJob {
  int image;
  int x, y;
  std::uint64_t seed;
};

struct DeltaGrad {
  std::vector<int> slots;    // indices into store.delta
  std::vector<double> grad;  // aligned with slots
};

std::vector<int> active_delta_slots(const ParameterStore& store,
                                    const PhaseSpec& spec) {
  std::vector<int> slots;
  for (int img : spec.active_images) {
    const int base = img * 6;
    if (spec.train_rotations) {
      slots.push_back(base);
      slots.push_back(base + 1);
      slots.push_back(base + 2);
    }
    slots.push_back(base + 3);
    slots.push_back(base + 4);
    slots.push_back(base + 5);
  }
  if (spec.train_focal) {
    slots.push_back(store.image_count * 6);
  }
  return slots;
}

void set_learnability(ParameterStore& store, const PhaseSpec& spec) {
  store.theta_learnable = spec.train_theta;
  store.focal_learnable = spec.train_focal;
  std::fill(store.pose_learnable.begin(), store.pose_learnable.end(), 0);
  for (int img : spec.active_images) store.pose_learnable[img] = 1;
}

/// Runs one schedule phase: epochs of (sample ray batch, accumulate
/// gradients, one Adam step per optimizer with learnable slots). Throws
/// DivergedError when the loss or any gradient goes non-finite.
void run_phase(TrainState& state, std::span<const Image> images,
               const TrainConfig& cfg, const PhaseSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  const int width = images[0].width;
  const int height = images[0].height;
  set_learnability(state.store, spec);

  PhaseRecord rec;
  rec.phase = spec.name;
  rec.image_index = spec.log_image_index;
  rec.level = state.level;
  rec.epochs = spec.epochs;
  rec.focal_start = state.store.focal();
  rec.loss_start = eval_loss(state, images, spec.active_images, cfg);

  const std::vector<int> slots = active_delta_slots(state.store, spec);
  const int threads = std::max(1, cfg.threads);
  const int batch = cfg.rays_per_batch;

  std::vector<double> theta_grad;
  std::vector<std::vector<double>> theta_grad_tl(threads);
  std::vector<std::vector<double>> delta_grad_tl(
      threads, std::vector<double>(state.store.delta.size(), 0.0));
  std::vector<rendering::RayTrainer> trainers;
  trainers.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    trainers.emplace_back(state.store.field, cfg.sampling, cfg.optim.loss_beta);
    if (spec.train_theta) {
      theta_grad_tl[t].assign(state.store.field.theta.size(), 0.0);
    }
  }
  std::vector<RayJob> jobs(batch);
  std::vector<double> loss_tl(threads, 0.0);

  try {
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
      const double lr_theta = ad::lr_at(cfg.optim.theta_schedule, epoch);
      const double lr_delta = ad::lr_at(cfg.optim.delta_schedule, epoch);

      for (RayJob& j : jobs) {
        j.image = spec.active_images[state.rng() % spec.active_images.size()];
        j.x = static_cast<int>(state.rng() % static_cast<std::uint64_t>(width));
        j.y = static_cast<int>(state.rng() % static_cast<std::uint64_t>(height));
        j.seed = state.rng();
      }

      auto worker = [&](int tid, int begin, int end) {
        rendering::RayTrainer& trainer = trainers[tid];
        double* tg = spec.train_theta ? theta_grad_tl[tid].data() : nullptr;
        std::vector<double>& dg = delta_grad_tl[tid];
        if (spec.train_theta) {
          std::fill(theta_grad_tl[tid].begin(), theta_grad_tl[tid].end(), 0.0);
        }
        std::fill(dg.begin(), dg.end(), 0.0);
        double loss_acc = 0.0;
        const geometry::Intrinsics intr{state.store.focal(), width, height};
        for (int r = begin; r < end; ++r) {
          const RayJob& j = jobs[r];
          std::mt19937_64 ray_rng(j.seed);
          const Vec3d target = images[j.image].rgb(j.x, j.y);
          const auto res = trainer.pixel_loss_grad(
              state.store.pose(j.image), intr, j.x + 0.5, j.y + 0.5, target,
              ray_rng, tg);
          loss_acc += res.loss;
          double* d = dg.data() + static_cast<std::size_t>(j.image) * 6;
          d[0] += res.rotation_grad.x;
          d[1] += res.rotation_grad.y;
          d[2] += res.rotation_grad.z;
          d[3] += res.translation_grad.x;
          d[4] += res.translation_grad.y;
          d[5] += res.translation_grad.z;
          dg[static_cast<std::size_t>(state.store.image_count) * 6] +=
              res.focal_grad;
        }
        loss_tl[tid] = loss_acc;
      };

      if (threads == 1) {
        worker(0, 0, batch);
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
          const int begin = static_cast<int>(static_cast<std::int64_t>(batch) * t / threads);
          const int end = static_cast<int>(static_cast<std::int64_t>(batch) * (t + 1) / threads);
          pool.emplace_back(worker, t, begin, end);
        }
        for (std::thread& th : pool) th.join();
      }

      // ordered reduction over thread buffers
      double batch_loss = 0.0;
      for (int t = 0; t < threads; ++t) batch_loss += loss_tl[t];
      if (!std::isfinite(batch_loss)) {
        throw NonFiniteGradientError("phase loss is not finite");
      }

      const double inv_b = 1.0 / batch;
      if (spec.train_theta) {
        theta_grad = theta_grad_tl[0];
        for (int t = 1; t < threads; ++t) {
          for (std::size_t i = 0; i < theta_grad.size(); ++i) {
            theta_grad[i] += theta_grad_tl[t][i];
          }
        }
        for (double& g : theta_grad) g *= inv_b;
        for (double g : theta_grad) {
          if (!std::isfinite(g)) {
            throw NonFiniteGradientError("theta gradient is not finite");
          }
        }
        ad::adam_step(state.adam_theta, state.store.field.theta, theta_grad,
                      lr_theta, cfg.optim.adam);
      }
      if (!slots.empty()) {
        std::vector<double> dgrad(slots.size(), 0.0);
        for (std::size_t k = 0; k < slots.size(); ++k) {
          double acc = 0.0;
          for (int t = 0; t < threads; ++t) acc += delta_grad_tl[t][slots[k]];
          dgrad[k] = acc * inv_b;
          if (!std::isfinite(dgrad[k])) {
            throw NonFiniteGradientError("camera gradient is not finite");
          }
        }
        ad::adam_step_masked(state.adam_delta, state.store.delta, dgrad, slots,
                             lr_delta, cfg.optim.adam);
      }
      state.total_steps += 1;
    }
  } catch (const NonFiniteGradientError&) {
    throw DivergedError(spec.name, spec.log_image_index);
  }

  rec.loss_end = eval_loss(state, images, spec.active_images, cfg);
  rec.focal_end = state.store.focal();
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  state.log.push_back(std::move(rec));
}

}  // namespace

void validate(const ScheduleConfig& config) {
  if (config.n_init < 2) throw DomainError("ScheduleConfig: n_init must be >= 2");
  if (config.n_part < 1) throw DomainError("ScheduleConfig: n_part must be >= 1");
  if (config.n_glob < 1) throw DomainError("ScheduleConfig: n_glob must be >= 1");
  if (config.xi_init < 1 || config.xi < 1) {
    throw DomainError("ScheduleConfig: iteration budgets must be >= 1");
  }
  if (config.pyramid_depth < 1) {
    throw DomainError("ScheduleConfig: pyramid_depth must be >= 1");
  }
}

std::int64_t planned_total_epochs(int image_count, const ScheduleConfig& cfg) {
  validate(cfg);
  std::int64_t total = cfg.xi_init;
  int triggers = 0;
  for (int k = 2; k <= image_count; ++k) {
    if (k % cfg.n_glob == 0) ++triggers;
  }
  total += static_cast<std::int64_t>(image_count - 1) * (2 * cfg.xi);
  total += static_cast<std::int64_t>(triggers) * cfg.xi;
  total += static_cast<std::int64_t>(cfg.pyramid_depth - 1) * cfg.xi;
  return total;
}

double eval_loss(const TrainState& state, std::span<const Image> images,
                 std::span<const int> image_indices, const TrainConfig& cfg) {
  rendering::SamplingConfig sampling = cfg.sampling;
  sampling.stratified = false;
  std::mt19937_64 rng(0);  // unused with midpoint sampling
  const int width = images[0].width;
  const int height = images[0].height;
  const geometry::Intrinsics intr{state.store.focal(), width, height};
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  const int rays = static_cast<int>(
      std::min<std::size_t>(cfg.eval_rays_per_image, pixels));
  double total = 0.0;
  std::int64_t count = 0;
  for (int img : image_indices) {
    const geometry::CameraPose pose = state.store.pose(img);
    for (int k = 0; k < rays; ++k) {
      const std::size_t p = pixels * k / rays + pixels / (2 * rays);
      const int x = static_cast<int>(p % width);
      const int y = static_cast<int>(p / width);
      const rendering::RenderOutput out = rendering::render_pixel(
          state.store.field, pose, intr, x + 0.5, y + 0.5, sampling, rng);
      const Vec3d target = images[img].rgb(x, y);
      total += ad::smooth_l1(out.color.x, target.x, cfg.optim.loss_beta) +
               ad::smooth_l1(out.color.y, target.y, cfg.optim.loss_beta) +
               ad::smooth_l1(out.color.z, target.z, cfg.optim.loss_beta);
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

void initialize(TrainState& state, std::span<const Image> images,
                const TrainConfig& cfg) {
  validate(cfg.schedule);
  if (!state.registered.empty()) {
    throw DomainError("initialize: registered set must be empty");
  }
  if (static_cast<int>(images.size()) < cfg.schedule.n_init) {
    throw DomainError("initialize: dataset smaller than n_init");
  }
  PhaseSpec spec;
  spec.name = "initialize";
  for (int i = 0; i < cfg.schedule.n_init; ++i) spec.active_images.push_back(i);
  spec.train_rotations = false;  // rotations stay zero during the warm-up
  spec.train_theta = true;
  spec.train_focal = true;
  spec.epochs = cfg.schedule.xi_init;
  spec.log_image_index = 0;
  run_phase(state, images, cfg, spec);

  state.registered.push_back(0);
  // keep theta, pose 0 and the focal; the other warm-up poses are discarded
  for (int i = 1; i < cfg.schedule.n_init; ++i) {
    state.store.set_pose(i, geometry::CameraPose{});
  }
}

void localize(TrainState& state, std::span<const Image> images,
              const TrainConfig& cfg, int image_index) {
  if (state.registered.empty() ||
      image_index != state.registered.back() + 1 ||
      image_index >= static_cast<int>(images.size())) {
    throw DomainError("localize: image_index must be max(E)+1");
  }
  state.store.set_pose(image_index, state.store.pose(image_index - 1));
  state.adam_delta.reset_slots(static_cast<std::size_t>(image_index) * 6, 6);

  PhaseSpec spec;
  spec.name = "localize";
  spec.active_images = {image_index};
  spec.train_rotations = true;
  spec.train_theta = false;
  spec.train_focal = false;
  spec.epochs = cfg.schedule.xi;
  spec.log_image_index = image_index;
  run_phase(state, images, cfg, spec);

  state.registered.push_back(image_index);
}

void partial_optimize(TrainState& state, std::span<const Image> images,
                      const TrainConfig& cfg) {
  if (state.registered.empty()) {
    throw DomainError("partial_optimize: registered set is empty");
  }
  const int window = std::min<int>(cfg.schedule.n_part,
                                   static_cast<int>(state.registered.size()));
  PhaseSpec spec;
  spec.name = "partial";
  spec.active_images.assign(state.registered.end() - window,
                            state.registered.end());
  spec.train_rotations = true;
  spec.train_theta = true;
  spec.train_focal = false;
  spec.epochs = cfg.schedule.xi;
  spec.log_image_index = state.registered.back();
  run_phase(state, images, cfg, spec);
}

void global_optimize(TrainState& state, std::span<const Image> images,
                     const TrainConfig& cfg, int epochs_override) {
  if (state.registered.empty()) {
    throw DomainError("global_optimize: registered set is empty");
  }
  PhaseSpec spec;
  spec.name = "global";
  spec.active_images = state.registered;
  spec.train_rotations = true;
  spec.train_theta = true;
  spec.train_focal = true;
  spec.epochs = epochs_override > 0 ? epochs_override : cfg.schedule.xi;
  spec.log_image_index = state.registered.back();
  run_phase(state, images, cfg, spec);
}

void run_incremental(TrainState& state, std::span<const Image> images,
                     const TrainConfig& cfg) {
  if (state.registered.empty()) {
    throw DomainError("run_incremental: state must be initialized first");
  }
  while (state.registered.size() < images.size()) {
    const int n = state.registered.back() + 1;
    localize(state, images, cfg, n);
    partial_optimize(state, images, cfg);
    if (static_cast<int>(state.registered.size()) % cfg.schedule.n_glob == 0) {
      global_optimize(state, images, cfg);
    }
  }
}

TrainState coarse_to_fine(const synthdata::SceneDataset& dataset,
                          const TrainConfig& cfg,
                          const LevelObserver& observer) {
  validate(cfg.schedule);
  const int depth = cfg.schedule.pyramid_depth;
  const int count = static_cast<int>(dataset.images.size());
  std::vector<std::vector<Image>> levels(depth);
  for (const Image& img : dataset.images) {
    geometry::ImagePyramid pyr = geometry::build_pyramid(img, depth);
    for (int l = 0; l < depth; ++l) levels[l].push_back(std::move(pyr.levels[l]));
  }
  TrainState state(cfg, count,
                   geometry::focal_from_fov(cfg.init_fov_deg,
                                            levels[0][0].width));
  initialize(state, levels[0], cfg);
  run_incremental(state, levels[0], cfg);
  if (observer) observer(0, state);
  for (int l = 1; l < depth; ++l) {
    state.store.focal_slot() *= 2.0;  // focal is in pixels; levels double
    state.level = l;
    global_optimize(state, levels[l], cfg, cfg.schedule.xi);
    if (observer) observer(l, state);
  }
  return state;
}

TrainState joint_baseline(const synthdata::SceneDataset& dataset,
                          const TrainConfig& cfg) {
  validate(cfg.schedule);
  if (dataset.images.empty()) {
    throw DomainError("joint_baseline: dataset is empty");
  }
  const int count = static_cast<int>(dataset.images.size());
  TrainState state(cfg, count,
                   geometry::focal_from_fov(cfg.init_fov_deg,
                                            dataset.images[0].width));
  state.level = cfg.schedule.pyramid_depth - 1;
  PhaseSpec spec;
  spec.name = "joint";
  for (int i = 0; i < count; ++i) spec.active_images.push_back(i);
  spec.train_rotations = true;
  spec.train_theta = true;
  spec.train_focal = true;
  spec.epochs = static_cast<int>(planned_total_epochs(count, cfg.schedule));
  spec.log_image_index = count - 1;
  run_phase(state, dataset.images, cfg, spec);
  for (int i = 0; i < count; ++i) state.registered.push_back(i);
  return state;
}

void write_run_log(const std::string& path, std::span<const PhaseRecord> log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write run log: " + path);
  for (const PhaseRecord& r : log) {
    json j{{"phase", r.phase},       {"image", r.image_index},
           {"level", r.level},       {"epochs", r.epochs},
           {"loss_start", r.loss_start}, {"loss_end", r.loss_end},
           {"focal_start", r.focal_start}, {"focal_end", r.focal_end},
           {"wall_s", r.wall_seconds}};
    out << j.dump() << "\n";
  }
}

std::vector<PhaseRecord> read_run_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read run log: " + path);
  std::vector<PhaseRecord> log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("run log: bad record: ") + e.what());
    }
    PhaseRecord r;
    r.phase = j.at("phase").get<std::string>();
    r.image_index = j.at("image").get<int>();
    r.level = j.at("level").get<int>();
    r.epochs = j.at("epochs").get<int>();
    r.loss_start = j.at("loss_start").get<double>();
    r.loss_end = j.at("loss_end").get<double>();
    r.focal_start = j.value("focal_start", 0.0);
    r.focal_end = j.value("focal_end", 0.0);
    r.wall_seconds = j.value("wall_s", 0.0);
    log.push_back(std::move(r));
  }
  return log;
}

}  // namespace incnerf::scheduler
