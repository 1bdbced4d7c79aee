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
#ifndef INCNERF_RENDERING_HPP_
#define INCNERF_RENDERING_HPP_

#include <random>
#include <span>
#include <utility>
#include <vector>

#include "incnerf/autodiff.hpp"
#include "incnerf/errors.hpp"
#include "incnerf/field.hpp"
#include "incnerf/geometry.hpp"
#include "incnerf/vec.hpp"

namespace incnerf::rendering {

struct SamplingConfig {
  double t_near = 0.1;
  double t_far = 6.0;
  int samples_per_ray = 64;
  bool stratified = false;
};

/// One rendered pixel: composited color, the per-sample quadrature weights,
/// and the transmittance left over at the far bound (sums to 1 with the
/// weights). Background is black, carried entirely by the residual.
struct RenderOutput {
  Vec3d color{};
  std::vector<double> weights;
  double residual_transmittance = 1.0;
};

void validate(const SamplingConfig& config);

/// Strictly increasing t values in [t_near, t_far]: bin midpoints when not
/// stratified, one uniform draw per bin otherwise.
std::vector<double> sample_ray(const SamplingConfig& config,
                               std::mt19937_64& rng);
void sample_ray_into(const SamplingConfig& config, std::mt19937_64& rng,
                     std::vector<double>& out);

template <typename T>
struct CompositeResult {
  Vec3<T> color;
  std::vector<T> weights;
  T residual_transmittance;
};

/// Discrete rendering quadrature: delta_i = t_{i+1} - t_i (the last uses
/// t_far), alpha_i = 1 - exp(-sigma_i delta_i), weight_i = T_i alpha_i with
/// T the running transmittance. sample(i) returns (color_i, sigma_i).
/// Runs on plain doubles or on tape variables.
template <typename T, typename SampleFn>
CompositeResult<T> composite_fn(std::span<const double> ts, double t_far,
                                SampleFn&& sample) {
  const std::size_t n = ts.size();
  CompositeResult<T> out;
  out.weights.reserve(n);
  auto [c0, d0] = sample(0);
  T trans = ad::constant_like(d0, 1.0);
  Vec3<T> acc{ad::constant_like(d0, 0.0), ad::constant_like(d0, 0.0),
              ad::constant_like(d0, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    auto [ci, di] = (i == 0) ? std::pair<Vec3<T>, T>(c0, d0) : sample(i);
    const double delta = (i + 1 < n) ? ts[i + 1] - ts[i] : t_far - ts[n - 1];
    using std::exp;
    T alpha = 1.0 - exp(di * (-delta));
    T w = trans * alpha;
    acc = acc + ci * w;
    trans = trans * (1.0 - alpha);
    out.weights.push_back(w);
  }
  out.color = acc;
  out.residual_transmittance = trans;
  return out;
}

/// Plain-double quadrature over precomputed samples (the public form).
RenderOutput composite(std::span<const double> t_values,
                       std::span<const double> densities,
                       std::span<const Vec3d> colors, double t_far);

/// Renders one pixel of an arbitrary field function
/// (position, unit view dir) -> FieldSample.
template <typename FieldFn>
RenderOutput render_pixel_fn(FieldFn&& field_at,
                             const geometry::CameraPose& pose,
                             const geometry::Intrinsics& intrinsics, double u,
                             double v, const SamplingConfig& sampling,
                             std::mt19937_64& rng) {
  const geometry::Ray ray = geometry::pixel_ray(pose, intrinsics, u, v);
  const Vec3d view = normalized(ray.direction);
  thread_local std::vector<double> ts;
  sample_ray_into(sampling, rng, ts);
  auto sample = [&](std::size_t i) -> std::pair<Vec3d, double> {
    const Vec3d pos = ray.origin + ray.direction * ts[i];
    const field::FieldSample fs = field_at(pos, view);
    return {fs.color, fs.density};
  };
  CompositeResult<double> res =
      composite_fn<double>(ts, sampling.t_far, sample);
  return RenderOutput{res.color, std::move(res.weights),
                      res.residual_transmittance};
}

/// Renders one pixel of the radiance field.
RenderOutput render_pixel(const field::RadianceField& f,
                          const geometry::CameraPose& pose,
                          const geometry::Intrinsics& intrinsics, double u,
                          double v, const SamplingConfig& sampling,
                          std::mt19937_64& rng);

/// Records one pixel's render + Smooth-L1 loss on a reverse-mode tape and
/// returns the gradients with respect to the camera parameters; field
/// gradients are accumulated into a caller-owned buffer. The field itself
/// enters the tape as a fused node backed by field_backward, so the tape
/// stays small while the MLP math runs on flat arrays.
class RayTrainer {
 public:
  RayTrainer(const field::RadianceField& f, const SamplingConfig& sampling,
             double loss_beta);

  struct Result {
    double loss = 0.0;
    Vec3d rotation_grad{};
    Vec3d translation_grad{};
    double focal_grad = 0.0;
  };

  /// theta_grad may be null (field frozen). Throws NonFiniteGradientError
  /// when the forward loss is non-finite.
  Result pixel_loss_grad(const geometry::CameraPose& pose,
                         const geometry::Intrinsics& intrinsics, double u,
                         double v, const Vec3d& target, std::mt19937_64& rng,
                         double* theta_grad);

  const SamplingConfig& sampling() const { return sampling_; }

 private:
  struct FieldOpCtx {
    const field::RadianceField* field;
    const double* slot;
    double* theta_grad;
    ad::Var in[6];
  };
  static void field_pullback(void* ctx, const double* out_adj, ad::Tape& tape);

  const field::RadianceField* field_;
  SamplingConfig sampling_;
  double beta_;
  ad::Tape tape_;
  std::vector<double> ts_;
  std::vector<double> slots_;
  std::vector<FieldOpCtx> ctxs_;
};

}  // namespace incnerf::rendering

#endif  // INCNERF_RENDERING_HPP_
