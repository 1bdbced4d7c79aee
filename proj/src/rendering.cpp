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
#include "incnerf/rendering.hpp"

#include <cmath>

namespace incnerf::rendering {

void validate(const SamplingConfig& config) {
  if (!(config.t_near >= 0.0 && config.t_near < config.t_far)) {
    throw DomainError("SamplingConfig: need 0 <= t_near < t_far");
  }
  if (config.samples_per_ray < 2) {
    throw DomainError("SamplingConfig: samples_per_ray must be >= 2");
  }
}

void sample_ray_into(const SamplingConfig& config, std::mt19937_64& rng,
                     std::vector<double>& out) {
  validate(config);
  const int n = config.samples_per_ray;
  const double bin = (config.t_far - config.t_near) / n;
  out.resize(n);
  if (!config.stratified) {
    for (int i = 0; i < n; ++i) out[i] = config.t_near + (i + 0.5) * bin;
    return;
  }
  for (int i = 0; i < n; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
    out[i] = config.t_near + (i + u) * bin;
  }
}

std::vector<double> sample_ray(const SamplingConfig& config,
                               std::mt19937_64& rng) {
  std::vector<double> out;
  sample_ray_into(config, rng, out);
  return out;
}

RenderOutput composite(std::span<const double> t_values,
                       std::span<const double> densities,
                       std::span<const Vec3d> colors, double t_far) {
  if (t_values.size() != densities.size() ||
      t_values.size() != colors.size() || t_values.empty()) {
    throw DomainError("composite: lists must be non-empty and equal length");
  }
  auto sample = [&](std::size_t i) -> std::pair<Vec3d, double> {
    return {colors[i], densities[i]};
  };
  CompositeResult<double> res = composite_fn<double>(t_values, t_far, sample);
  return RenderOutput{res.color, std::move(res.weights),
                      res.residual_transmittance};
}

RenderOutput render_pixel(const field::RadianceField& f,
                          const geometry::CameraPose& pose,
                          const geometry::Intrinsics& intrinsics, double u,
                          double v, const SamplingConfig& sampling,
                          std::mt19937_64& rng) {
  auto field_at = [&f](const Vec3d& pos, const Vec3d& view) {
    return field::eval_field(f, pos, view);
  };
  return render_pixel_fn(field_at, pose, intrinsics, u, v, sampling, rng);
}

RayTrainer::RayTrainer(const field::RadianceField& f,
                       const SamplingConfig& sampling, double loss_beta)
    : field_(&f), sampling_(sampling), beta_(loss_beta) {
  validate(sampling);
  if (loss_beta <= 0.0) throw DomainError("RayTrainer: loss beta must be > 0");
  slots_.resize(static_cast<std::size_t>(sampling.samples_per_ray) *
                field::activation_size(f.config));
  ctxs_.resize(sampling.samples_per_ray);
}

void RayTrainer::field_pullback(void* ctx, const double* out_adj,
                                ad::Tape& tape) {
  const auto* c = static_cast<const FieldOpCtx*>(ctx);
  Vec3d pos_adj, view_adj;
  field::field_backward(*c->field, c->slot, out_adj, c->theta_grad, pos_adj,
                        view_adj);
  tape.accumulate_adjoint(c->in[0], pos_adj.x);
  tape.accumulate_adjoint(c->in[1], pos_adj.y);
  tape.accumulate_adjoint(c->in[2], pos_adj.z);
  tape.accumulate_adjoint(c->in[3], view_adj.x);
  tape.accumulate_adjoint(c->in[4], view_adj.y);
  tape.accumulate_adjoint(c->in[5], view_adj.z);
}

RayTrainer::Result RayTrainer::pixel_loss_grad(
    const geometry::CameraPose& pose, const geometry::Intrinsics& intrinsics,
    double u, double v, const Vec3d& target, std::mt19937_64& rng,
    double* theta_grad) {
  using ad::Rev;
  tape_.reset();
  sample_ray_into(sampling_, rng, ts_);

  const Vec3<Rev> omega{{tape_, tape_.leaf(pose.rotation.x)},
                        {tape_, tape_.leaf(pose.rotation.y)},
                        {tape_, tape_.leaf(pose.rotation.z)}};
  const Vec3<Rev> origin{{tape_, tape_.leaf(pose.translation.x)},
                         {tape_, tape_.leaf(pose.translation.y)},
                         {tape_, tape_.leaf(pose.translation.z)}};
  const Rev focal{tape_, tape_.leaf(intrinsics.focal)};

  const Mat3<Rev> rot = geometry::rotation_from_axis_angle<Rev>(omega);
  const Vec3<Rev> dir = geometry::ray_direction<Rev>(
      rot, focal, u, v, intrinsics.cx(), intrinsics.cy());
  const Vec3<Rev> view = normalized(dir);
  const Vec3d view_val{view.x.value(), view.y.value(), view.z.value()};

  auto sample = [&](std::size_t i) -> std::pair<Vec3<Rev>, Rev> {
    const Vec3<Rev> pos = origin + dir * ts_[i];
    double* slot =
        slots_.data() + i * field::activation_size(field_->config);
    double out[4];
    field::field_forward(*field_,
                         {pos.x.value(), pos.y.value(), pos.z.value()},
                         view_val, slot, out);
    ctxs_[i] = FieldOpCtx{field_, slot, theta_grad,
                          {pos.x.v, pos.y.v, pos.z.v, view.x.v, view.y.v,
                           view.z.v}};
    const ad::Var first = tape_.custom(out, 4, &field_pullback, &ctxs_[i]);
    return {Vec3<Rev>{{tape_, {first.i}},
                      {tape_, {first.i + 1}},
                      {tape_, {first.i + 2}}},
            Rev{tape_, {first.i + 3}}};
  };

  CompositeResult<Rev> res =
      composite_fn<Rev>(ts_, sampling_.t_far, sample);
  const Rev loss = smooth_l1(res.color.x, target.x, beta_) +
                   smooth_l1(res.color.y, target.y, beta_) +
                   smooth_l1(res.color.z, target.z, beta_);
  tape_.backward(loss.v);

  Result r;
  r.loss = loss.value();
  r.rotation_grad = {tape_.adjoint(omega.x.v), tape_.adjoint(omega.y.v),
                     tape_.adjoint(omega.z.v)};
  r.translation_grad = {tape_.adjoint(origin.x.v), tape_.adjoint(origin.y.v),
                        tape_.adjoint(origin.z.v)};
  r.focal_grad = tape_.adjoint(focal.v);
  return r;
}

}  // namespace incnerf::rendering
