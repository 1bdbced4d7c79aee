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
#ifndef INCNERF_FIELD_HPP_
#define INCNERF_FIELD_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "incnerf/errors.hpp"
#include "incnerf/vec.hpp"

namespace incnerf::field {

/// Network shape. `layers` linear layers of width `hidden_dim` form the
/// position trunk; sine activations throughout, with the given frequency
/// multiplier on the first layer only.
struct FieldConfig {
  int layers = 8;
  int hidden_dim = 128;
  double first_layer_frequency = 30.0;
  int color_channels = 3;  // fixed
};

/// Offsets of one linear layer inside the flat weight vector.
struct LayerSpec {
  int in = 0;
  int out = 0;
  std::size_t w_off = 0;  // row-major [out][in]
  std::size_t b_off = 0;
  double omega = 1.0;  // frequency multiplier inside the sine
};

/// Full parameter layout. The trunk maps position -> hidden; the density
/// head branches off the last trunk activation; the view direction is
/// concatenated into one extra sine layer that feeds the color head.
struct FieldLayout {
  std::vector<LayerSpec> trunk;
  LayerSpec sigma_head;    // hidden -> 1, linear (softplus on output)
  LayerSpec color_hidden;  // hidden+3 -> hidden, sine
  LayerSpec rgb_head;      // hidden -> 3, linear (sigmoid on output)
  std::size_t total = 0;
};

FieldLayout field_layout(const FieldConfig& config);
std::size_t param_count(const FieldConfig& config);

/// Number of doubles one evaluation needs to remember for its backward pass.
std::size_t activation_size(const FieldConfig& config);

/// The radiance field: a flat weight vector plus its layout.
struct RadianceField {
  FieldConfig config;
  FieldLayout layout;
  std::vector<double> theta;

  explicit RadianceField(const FieldConfig& cfg)
      : config(cfg), layout(field_layout(cfg)), theta(layout.total, 0.0) {}
};

/// Uniform weight init following the sine-network scheme: first layer in
/// +-1/fan_in, every later layer +-sqrt(6/fan_in). Deterministic in `seed`.
RadianceField init_field(const FieldConfig& config, std::uint64_t seed);

struct FieldSample {
  Vec3d color;     // in [0,1]^3 (sigmoid output)
  double density;  // >= 0 (softplus output)
};

/// Forward pass recording the activations needed by field_backward into
/// `slot` (activation_size doubles). Outputs r,g,b,density.
void field_forward(const RadianceField& f, const Vec3d& position,
                   const Vec3d& view_dir, double* slot,
                   double out_rgb_sigma[4]);

/// Reverse pass from d(loss)/d(outputs). Adds weight gradients into
/// theta_grad when it is non-null (size = param_count) and always fills the
/// position/view adjoints.
void field_backward(const RadianceField& f, const double* slot,
                    const double out_adj[4], double* theta_grad,
                    Vec3d& position_adj, Vec3d& view_adj);

/// Convenience single-point evaluation. `view_dir` must be unit length
/// within 1e-6; density depends on position only, by construction.
FieldSample eval_field(const RadianceField& f, const Vec3d& position,
                       const Vec3d& view_dir);

/// Checkpoint layout: "INRF" magic, u32 version, i32 layers, i32 hidden_dim,
/// i32 color_channels, f64 first_layer_frequency, u64 count, then the flat
/// weight vector as little-endian f64.
void save_checkpoint(const std::string& path, const RadianceField& f);
RadianceField load_checkpoint(const std::string& path);

}  // namespace incnerf::field

#endif  // INCNERF_FIELD_HPP_
