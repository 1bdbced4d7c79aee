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

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "incnerf/evaluation.hpp"
#include "incnerf/scheduler.hpp"
#include "incnerf/synthdata.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace incnerf;

namespace {

// ---------------------------------------------------------------------------
// config serialization

json to_json(const scheduler::TrainConfig& c, const std::string& mode,
             const std::string& data, const std::string& out) {
  return json{
      {"mode", mode},
      {"dataset", data},
      {"output", out},
      {"seed", c.seed},
      {"threads", c.threads},
      {"schedule",
       {{"n_init", c.schedule.n_init},
        {"n_part", c.schedule.n_part},
        {"n_glob", c.schedule.n_glob},
        {"xi_init", c.schedule.xi_init},
        {"xi", c.schedule.xi},
        {"pyramid_depth", c.schedule.pyramid_depth}}},
      {"field",
       {{"layers", c.field.layers},
        {"hidden_dim", c.field.hidden_dim},
        {"first_layer_frequency", c.field.first_layer_frequency}}},
      {"sampling",
       {{"t_near", c.sampling.t_near},
        {"t_far", c.sampling.t_far},
        {"samples_per_ray", c.sampling.samples_per_ray},
        {"stratified", c.sampling.stratified}}},
      {"optim",
       {{"lr_theta", c.optim.theta_schedule.base},
        {"decay_theta", c.optim.theta_schedule.decay},
        {"every_theta", c.optim.theta_schedule.every},
        {"lr_delta", c.optim.delta_schedule.base},
        {"decay_delta", c.optim.delta_schedule.decay},
        {"every_delta", c.optim.delta_schedule.every},
        {"loss_beta", c.optim.loss_beta}}},
      {"rays_per_batch", c.rays_per_batch},
      {"init_fov_deg", c.init_fov_deg},
      {"eval_rays_per_image", c.eval_rays_per_image}};
}

void config_from_json(const json& j, scheduler::TrainConfig& c,
                      std::string& mode) {
  mode = j.value("mode", mode);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    c.schedule.n_init = s.value("n_init", c.schedule.n_init);
    c.schedule.n_part = s.value("n_part", c.schedule.n_part);
    c.schedule.n_glob = s.value("n_glob", c.schedule.n_glob);
    c.schedule.xi_init = s.value("xi_init", c.schedule.xi_init);
    c.schedule.xi = s.value("xi", c.schedule.xi);
    c.schedule.pyramid_depth = s.value("pyramid_depth", c.schedule.pyramid_depth);
  }
  if (j.contains("field")) {
    const json& f = j["field"];
    c.field.layers = f.value("layers", c.field.layers);
    c.field.hidden_dim = f.value("hidden_dim", c.field.hidden_dim);
    c.field.first_layer_frequency =
        f.value("first_layer_frequency", c.field.first_layer_frequency);
  }
  if (j.contains("sampling")) {
    const json& s = j["sampling"];
    c.sampling.t_near = s.value("t_near", c.sampling.t_near);
    c.sampling.t_far = s.value("t_far", c.sampling.t_far);
    c.sampling.samples_per_ray =
        s.value("samples_per_ray", c.sampling.samples_per_ray);
    c.sampling.stratified = s.value("stratified", c.sampling.stratified);
  }
  if (j.contains("optim")) {
    const json& o = j["optim"];
    c.optim.theta_schedule.base = o.value("lr_theta", c.optim.theta_schedule.base);
    c.optim.theta_schedule.decay =
        o.value("decay_theta", c.optim.theta_schedule.decay);
    c.optim.theta_schedule.every =
        o.value("every_theta", c.optim.theta_schedule.every);
    c.optim.delta_schedule.base = o.value("lr_delta", c.optim.delta_schedule.base);
    c.optim.delta_schedule.decay =
        o.value("decay_delta", c.optim.delta_schedule.decay);
    c.optim.delta_schedule.every =
        o.value("every_delta", c.optim.delta_schedule.every);
    c.optim.loss_beta = o.value("loss_beta", c.optim.loss_beta);
  }
  c.rays_per_batch = j.value("rays_per_batch", c.rays_per_batch);
  c.init_fov_deg = j.value("init_fov_deg", c.init_fov_deg);
  c.eval_rays_per_image = j.value("eval_rays_per_image", c.eval_rays_per_image);
}

// ---------------------------------------------------------------------------
// trajectory files: "# focal F" header, then "i wx wy wz tx ty tz" lines

void write_trajectory(const std::string& path,
                      const std::vector<geometry::CameraPose>& poses,
                      double focal) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trajectory: " + path);
  out.precision(17);
  out << "# focal " << focal << "\n";
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const geometry::CameraPose& p = poses[i];
    out << i << " " << p.rotation.x << " " << p.rotation.y << " "
        << p.rotation.z << " " << p.translation.x << " " << p.translation.y
        << " " << p.translation.z << "\n";
  }
}

struct Trajectory {
  std::vector<geometry::CameraPose> poses;
  std::optional<double> focal;
};

Trajectory read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read trajectory: " + path);
  Trajectory t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key;
      double value;
      if (ss >> key >> value && key == "focal") t.focal = value;
      continue;
    }
    std::istringstream ss(line);
    int idx;
    geometry::CameraPose p;
    if (!(ss >> idx >> p.rotation.x >> p.rotation.y >> p.rotation.z >>
          p.translation.x >> p.translation.y >> p.translation.z)) {
      throw FormatError("trajectory: malformed line '" + line + "'");
    }
    t.poses.push_back(p);
  }
  if (t.poses.empty()) throw FormatError("trajectory: no poses in " + path);
  return t;
}

// Deterministic held-out pixel subset: every pixel with (x + 2y) % 4 == 3.
bool held_out(int x, int y) { return (x + 2 * y) % 4 == 3; }

double psnr_held_out(const field::RadianceField& f,
                     const geometry::CameraPose& pose,
                     const geometry::Intrinsics& intr, const Image& reference,
                     const rendering::SamplingConfig& sampling) {
  std::mt19937_64 rng(0);
  rendering::SamplingConfig s = sampling;
  s.stratified = false;
  double mse = 0.0;
  std::int64_t n = 0;
  for (int y = 0; y < reference.height; ++y) {
    for (int x = 0; x < reference.width; ++x) {
      if (!held_out(x, y)) continue;
      const auto out = rendering::render_pixel(f, pose, intr, x + 0.5, y + 0.5,
                                               s, rng);
      const Vec3d ref = reference.rgb(x, y);
      mse += squared_norm(out.color - ref);
      n += 3;
    }
  }
  mse /= static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

void print_summary(const std::vector<scheduler::PhaseRecord>& log) {
  double wall = 0.0;
  std::int64_t epochs = 0;
  for (const auto& r : log) {
    wall += r.wall_seconds;
    epochs += r.epochs;
  }
  std::printf("phases: %zu, epochs: %lld, wall: %.1f s\n", log.size(),
              static_cast<long long>(epochs), wall);
  if (!log.empty()) {
    std::printf("final phase '%s' loss %.6f -> %.6f, focal %.3f\n",
                log.back().phase.c_str(), log.back().loss_start,
                log.back().loss_end, log.back().focal_end);
  }
}

// ---------------------------------------------------------------------------
// subcommands

struct TrainFlags {
  scheduler::TrainConfig cfg;
  std::string data;
  std::string out;
  std::string mode = "incremental";
  std::string config_path;
  bool no_stratified = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--data", f.data, "dataset directory")->required();
  cmd->add_option("--out", f.out, "output directory")->required();
  cmd->add_option("--mode", f.mode, "incremental | joint")
      ->check(CLI::IsMember({"incremental", "joint"}));
  cmd->add_option("--config", f.config_path,
                  "config.json to load before applying flags");
  cmd->add_option("--n-init", f.cfg.schedule.n_init, "warm-up image count");
  cmd->add_option("--n-part", f.cfg.schedule.n_part, "partial window size");
  cmd->add_option("--n-glob", f.cfg.schedule.n_glob, "global cadence");
  cmd->add_option("--xi-init", f.cfg.schedule.xi_init, "warm-up epochs");
  cmd->add_option("--xi", f.cfg.schedule.xi, "per-phase epochs");
  cmd->add_option("--pyramid-depth", f.cfg.schedule.pyramid_depth,
                  "gaussian pyramid depth");
  cmd->add_option("--layers", f.cfg.field.layers, "trunk layer count");
  cmd->add_option("--hidden-dim", f.cfg.field.hidden_dim, "hidden width");
  cmd->add_option("--omega0", f.cfg.field.first_layer_frequency,
                  "first-layer sine frequency");
  cmd->add_option("--t-near", f.cfg.sampling.t_near, "near bound");
  cmd->add_option("--t-far", f.cfg.sampling.t_far, "far bound");
  cmd->add_option("--samples", f.cfg.sampling.samples_per_ray,
                  "samples per ray");
  cmd->add_flag("--no-stratified", f.no_stratified,
                "use midpoint sampling during training");
  cmd->add_option("--rays", f.cfg.rays_per_batch, "rays per batch");
  cmd->add_option("--lr-theta", f.cfg.optim.theta_schedule.base,
                  "field learning rate");
  cmd->add_option("--decay-theta", f.cfg.optim.theta_schedule.decay,
                  "field lr decay factor");
  cmd->add_option("--every-theta", f.cfg.optim.theta_schedule.every,
                  "field lr decay interval (epochs)");
  cmd->add_option("--lr-delta", f.cfg.optim.delta_schedule.base,
                  "camera learning rate");
  cmd->add_option("--decay-delta", f.cfg.optim.delta_schedule.decay,
                  "camera lr decay factor");
  cmd->add_option("--every-delta", f.cfg.optim.delta_schedule.every,
                  "camera lr decay interval (epochs)");
  cmd->add_option("--loss-beta", f.cfg.optim.loss_beta, "smooth-l1 threshold");
  cmd->add_option("--seed", f.cfg.seed, "run seed");
  cmd->add_option("--threads", f.cfg.threads, "render worker threads");
  cmd->add_option("--fov", f.cfg.init_fov_deg, "initial field of view (deg)");
  cmd->add_option("--eval-rays", f.cfg.eval_rays_per_image,
                  "phase-loss evaluation rays per image");
}

scheduler::TrainConfig resolve_train_config(TrainFlags& f, CLI::App* cmd) {
  if (f.config_path.empty()) {
    scheduler::TrainConfig cfg = f.cfg;
    if (f.no_stratified) cfg.sampling.stratified = false;
    return cfg;
  }
  scheduler::TrainConfig cfg;
  std::ifstream in(f.config_path);
  if (!in) throw IoError("cannot read config: " + f.config_path);
  json j = json::parse(in);
  config_from_json(j, cfg, f.mode);

  // flags given explicitly override the loaded config
  auto on = [cmd](const std::string& name) { return cmd->count(name) > 0; };
  const scheduler::TrainConfig& fl = f.cfg;
  if (on("--n-init")) cfg.schedule.n_init = fl.schedule.n_init;
  if (on("--n-part")) cfg.schedule.n_part = fl.schedule.n_part;
  if (on("--n-glob")) cfg.schedule.n_glob = fl.schedule.n_glob;
  if (on("--xi-init")) cfg.schedule.xi_init = fl.schedule.xi_init;
  if (on("--xi")) cfg.schedule.xi = fl.schedule.xi;
  if (on("--pyramid-depth")) cfg.schedule.pyramid_depth = fl.schedule.pyramid_depth;
  if (on("--layers")) cfg.field.layers = fl.field.layers;
  if (on("--hidden-dim")) cfg.field.hidden_dim = fl.field.hidden_dim;
  if (on("--omega0"))
    cfg.field.first_layer_frequency = fl.field.first_layer_frequency;
  if (on("--t-near")) cfg.sampling.t_near = fl.sampling.t_near;
  if (on("--t-far")) cfg.sampling.t_far = fl.sampling.t_far;
  if (on("--samples")) cfg.sampling.samples_per_ray = fl.sampling.samples_per_ray;
  if (on("--rays")) cfg.rays_per_batch = fl.rays_per_batch;
  if (on("--lr-theta")) cfg.optim.theta_schedule.base = fl.optim.theta_schedule.base;
  if (on("--decay-theta"))
    cfg.optim.theta_schedule.decay = fl.optim.theta_schedule.decay;
  if (on("--every-theta"))
    cfg.optim.theta_schedule.every = fl.optim.theta_schedule.every;
  if (on("--lr-delta")) cfg.optim.delta_schedule.base = fl.optim.delta_schedule.base;
  if (on("--decay-delta"))
    cfg.optim.delta_schedule.decay = fl.optim.delta_schedule.decay;
  if (on("--every-delta"))
    cfg.optim.delta_schedule.every = fl.optim.delta_schedule.every;
  if (on("--loss-beta")) cfg.optim.loss_beta = fl.optim.loss_beta;
  if (on("--seed")) cfg.seed = fl.seed;
  if (on("--threads")) cfg.threads = fl.threads;
  if (on("--fov")) cfg.init_fov_deg = fl.init_fov_deg;
  if (on("--eval-rays")) cfg.eval_rays_per_image = fl.eval_rays_per_image;
  if (f.no_stratified) cfg.sampling.stratified = false;
  return cfg;
}

int cmd_train(TrainFlags& f, CLI::App* cmd) {
  const scheduler::TrainConfig cfg = resolve_train_config(f, cmd);
  const synthdata::SceneDataset ds = synthdata::load_dataset(f.data);
  fs::create_directories(f.out);
  {
    std::ofstream out(fs::path(f.out) / "config.json");
    out << to_json(cfg, f.mode, f.data, f.out).dump(2) << "\n";
  }
  scheduler::TrainState state =
      f.mode == "joint" ? scheduler::joint_baseline(ds, cfg)
                        : scheduler::coarse_to_fine(ds, cfg);
  scheduler::write_run_log((fs::path(f.out) / "run_log.jsonl").string(),
                           state.log);
  write_trajectory((fs::path(f.out) / "poses_est.txt").string(),
                   state.store.all_poses(), state.store.focal());
  field::save_checkpoint((fs::path(f.out) / "checkpoint.bin").string(),
                         state.store.field);
  print_summary(state.log);
  std::printf(
      "wrote %s/{config.json,run_log.jsonl,poses_est.txt,checkpoint.bin}\n",
      f.out.c_str());
  return 0;
}

struct SynthFlags {
  std::string out;
  std::string kind = "arc";
  int count = 12;
  int size = 32;
  double step = 0.25;
  double step_deg = 15.0;
  double radius = 2.5;
  double fov = 53.0;
  int blobs = 5;
  std::uint64_t scene_seed = 11;
  int oversample = 1024;
  double t_near = 0.1;
  double t_far = 6.0;
};

int cmd_synth(const SynthFlags& f) {
  const synthdata::TrajectoryKind kind =
      f.kind == "arc" ? synthdata::TrajectoryKind::kArc
                      : synthdata::TrajectoryKind::kForward;
  synthdata::TrajectoryParams params;
  params.step = f.step;
  params.step_deg = f.step_deg;
  params.radius = f.radius;
  params.fov_deg = f.fov;
  params.width = f.size;
  const synthdata::AnalyticScene scene =
      synthdata::random_scene(kind, f.blobs, f.scene_seed);
  const synthdata::GroundTruth gt =
      synthdata::generate_trajectory(kind, f.count, params);
  synthdata::SceneDataset ds = synthdata::render_dataset(
      scene, gt, f.size, f.size, f.oversample, f.t_near, f.t_far);
  ds.trajectory_kind = f.kind;
  synthdata::save_dataset(f.out, ds);
  std::printf("wrote %d %dx%d images to %s (focal %.3f)\n", f.count, f.size,
              f.size, f.out.c_str(), gt.focal);
  return 0;
}

struct EvalFlags {
  std::string traj;
  std::string data;
  std::string checkpoint;
  std::string out;
  bool with_psnr = false;
  int samples = 64;
  double t_near = 0.1;
  double t_far = 6.0;
};

int cmd_eval(const EvalFlags& f) {
  const Trajectory est = read_trajectory(f.traj);
  const synthdata::SceneDataset ds = synthdata::load_dataset(f.data);
  if (!ds.ground_truth) {
    throw DomainError("eval: dataset has no ground truth");
  }
  if (est.poses.size() != ds.ground_truth->poses.size()) {
    throw DimensionMismatchError("eval: trajectory/dataset pose count differs");
  }
  const evaluation::TrajectoryMetrics m =
      evaluation::evaluate_trajectory(est.poses, ds.ground_truth->poses);

  double mean_psnr = std::numeric_limits<double>::quiet_NaN();
  if (f.with_psnr) {
    const field::RadianceField field = field::load_checkpoint(f.checkpoint);
    if (!est.focal) {
      throw FormatError("eval: trajectory file lacks a '# focal' header");
    }
    const geometry::Intrinsics intr{*est.focal, ds.width, ds.height};
    const rendering::SamplingConfig sampling{f.t_near, f.t_far, f.samples,
                                             false};
    double acc = 0.0;
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
      acc += psnr_held_out(field, est.poses[i], intr, ds.images[i], sampling);
    }
    mean_psnr = acc / static_cast<double>(ds.images.size());
  }

  const std::string scene_name = fs::path(f.data).filename().string();
  std::ostringstream table;
  table << "scene\tdR\tdT\tPSNR\n";
  table << scene_name << "\t" << m.delta_r_deg << "\t" << m.delta_t << "\t";
  if (f.with_psnr) {
    table << mean_psnr;
  } else {
    table << "-";
  }
  table << "\n";
  std::cout << table.str();
  if (!f.out.empty()) {
    std::ofstream out(f.out);
    out << table.str();
  }
  return 0;
}

struct RenderFlags {
  std::string checkpoint;
  std::string poses;
  std::string out;
  double focal = 0.0;
  int width = 32;
  int height = 32;
  int samples = 64;
  double t_near = 0.1;
  double t_far = 6.0;
};

int cmd_render(const RenderFlags& f) {
  const field::RadianceField field = field::load_checkpoint(f.checkpoint);
  const Trajectory traj = read_trajectory(f.poses);
  double focal = f.focal;
  if (focal <= 0.0) {
    if (!traj.focal) {
      throw DomainError(
          "render: no --focal given and the poses file has no '# focal'");
    }
    focal = *traj.focal;
  }
  fs::create_directories(f.out);
  const geometry::Intrinsics intr{focal, f.width, f.height};
  const rendering::SamplingConfig sampling{f.t_near, f.t_far, f.samples, false};
  std::mt19937_64 rng(0);
  for (std::size_t i = 0; i < traj.poses.size(); ++i) {
    Image img(f.width, f.height);
    for (int y = 0; y < f.height; ++y) {
      for (int x = 0; x < f.width; ++x) {
        const auto out = rendering::render_pixel(field, traj.poses[i], intr,
                                                 x + 0.5, y + 0.5, sampling,
                                                 rng);
        img.set_rgb(x, y, out.color);
      }
    }
    char name[32];
    std::snprintf(name, sizeof(name), "render_%04zu.ppm", i);
    synthdata::write_ppm((fs::path(f.out) / name).string(), img);
  }
  std::printf("wrote %zu renders to %s\n", traj.poses.size(), f.out.c_str());
  return 0;
}

struct AblateFlags {
  TrainFlags train;
  std::vector<int> xi{600, 900};
  std::vector<int> nglob{5, 10};
};

int cmd_ablate(AblateFlags& f, CLI::App* cmd) {
  scheduler::TrainConfig base = resolve_train_config(f.train, cmd);
  const synthdata::SceneDataset ds = synthdata::load_dataset(f.train.data);
  if (!ds.ground_truth) {
    throw DomainError("ablate: dataset has no ground truth");
  }
  std::ostringstream table;
  table << "setting\tdR\tdT\n";
  auto emit = [&](const std::string& label,
                  const std::vector<geometry::CameraPose>& poses) {
    const evaluation::TrajectoryMetrics m =
        evaluation::evaluate_trajectory(poses, ds.ground_truth->poses);
    table << label << "\t" << m.delta_r_deg << "\t" << m.delta_t << "\n";
    std::printf("%s\tdR=%.4f\tdT=%.4f\n", label.c_str(), m.delta_r_deg,
                m.delta_t);
  };
  for (int xi : f.xi) {
    for (int nglob : f.nglob) {
      scheduler::TrainConfig cfg = base;
      cfg.schedule.xi = xi;
      cfg.schedule.n_glob = nglob;
      std::ostringstream tag;
      tag << "xi=" << xi << ",N_glob=" << nglob;
      try {
        std::vector<geometry::CameraPose> coarse_poses;
        const scheduler::TrainState state = scheduler::coarse_to_fine(
            ds, cfg, [&](int level, const scheduler::TrainState& s) {
              if (level == 0) coarse_poses = s.store.all_poses();
            });
        emit("C," + tag.str(), coarse_poses);
        emit("F," + tag.str(), state.store.all_poses());
      } catch (const DivergedError& e) {
        table << "F," << tag.str() << "\tdiverged\tdiverged\n";
        std::printf("F,%s\tdiverged (%s)\n", tag.str().c_str(), e.what());
      }
    }
  }
  if (!f.train.out.empty()) {
    fs::create_directories(f.train.out);
    std::ofstream out(fs::path(f.train.out) / "ablation.tsv");
    out << table.str();
  }
  return 0;
}

struct ReportFlags {
  std::string run;
};

int cmd_report(const ReportFlags& f) {
  const auto log =
      scheduler::read_run_log((fs::path(f.run) / "run_log.jsonl").string());
  std::printf("%-12s %5s %5s %7s %12s %12s %8s\n", "phase", "img", "level",
              "epochs", "loss_start", "loss_end", "wall_s");
  for (const auto& r : log) {
    std::printf("%-12s %5d %5d %7d %12.6f %12.6f %8.2f\n", r.phase.c_str(),
                r.image_index, r.level, r.epochs, r.loss_start, r.loss_end,
                r.wall_seconds);
  }
  print_summary(log);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"incremental camera-free radiance field trainer"};
  app.require_subcommand(1);

  SynthFlags synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--out", synth.out, "dataset directory")->required();
  synth_cmd->add_option("--kind", synth.kind, "arc | forward")
      ->check(CLI::IsMember({"arc", "forward"}));
  synth_cmd->add_option("--count", synth.count, "image count");
  synth_cmd->add_option("--size", synth.size, "image width and height");
  synth_cmd->add_option("--step", synth.step, "forward step (world units)");
  synth_cmd->add_option("--step-deg", synth.step_deg, "arc yaw step (deg)");
  synth_cmd->add_option("--radius", synth.radius, "arc radius");
  synth_cmd->add_option("--fov", synth.fov, "field of view (deg)");
  synth_cmd->add_option("--blobs", synth.blobs, "blob count");
  synth_cmd->add_option("--scene-seed", synth.scene_seed, "blob layout seed");
  synth_cmd->add_option("--oversample", synth.oversample,
                        "samples per ray for ground-truth rendering");
  synth_cmd->add_option("--t-near", synth.t_near, "near bound");
  synth_cmd->add_option("--t-far", synth.t_far, "far bound");

  TrainFlags train;
  CLI::App* train_cmd = app.add_subcommand("train", "train on a dataset");
  add_train_flags(train_cmd, train);

  EvalFlags eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score a recovered trajectory");
  eval_cmd->add_option("--traj", eval.traj, "estimated poses file")->required();
  eval_cmd
      ->add_option("--data", eval.data, "dataset directory with ground truth")
      ->required();
  eval_cmd->add_flag("--psnr", eval.with_psnr, "also compute held-out PSNR");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "field checkpoint");
  eval_cmd->add_option("--out", eval.out, "write the metrics table here");
  eval_cmd->add_option("--samples", eval.samples, "samples per ray for PSNR");
  eval_cmd->add_option("--t-near", eval.t_near, "near bound");
  eval_cmd->add_option("--t-far", eval.t_far, "far bound");

  RenderFlags render;
  CLI::App* render_cmd =
      app.add_subcommand("render", "render novel views from a checkpoint");
  render_cmd->add_option("--checkpoint", render.checkpoint, "field checkpoint")
      ->required();
  render_cmd->add_option("--poses", render.poses, "poses file")->required();
  render_cmd->add_option("--out", render.out, "output directory")->required();
  render_cmd->add_option("--focal", render.focal,
                         "focal in pixels (default: poses file header)");
  render_cmd->add_option("--width", render.width, "image width");
  render_cmd->add_option("--height", render.height, "image height");
  render_cmd->add_option("--samples", render.samples, "samples per ray");
  render_cmd->add_option("--t-near", render.t_near, "near bound");
  render_cmd->add_option("--t-far", render.t_far, "far bound");

  AblateFlags ablate;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "sweep xi / N_glob / coarse-fine settings");
  add_train_flags(ablate_cmd, ablate.train);
  ablate_cmd->get_option("--out")->required(false);
  ablate_cmd->add_option("--xi-list", ablate.xi, "xi values")->delimiter(',');
  ablate_cmd->add_option("--nglob-list", ablate.nglob, "N_glob values")
      ->delimiter(',');

  ReportFlags report;
  CLI::App* report_cmd =
      app.add_subcommand("report", "summarize a run directory");
  report_cmd->add_option("--run", report.run, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (train_cmd->parsed()) return cmd_train(train, train_cmd);
    if (eval_cmd->parsed()) {
      if (eval.with_psnr && eval.checkpoint.empty()) {
        std::cerr << "eval: --psnr requires --checkpoint\n";
        return 1;
      }
      return cmd_eval(eval);
    }
    if (render_cmd->parsed()) return cmd_render(render);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate, ablate_cmd);
    if (report_cmd->parsed()) return cmd_report(report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
