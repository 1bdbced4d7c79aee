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
#include "incnerf/autodiff.hpp"

#include <cmath>

namespace incnerf::ad {

double smooth_l1(double pred, double target, double beta) {
  if (beta <= 0.0) throw DomainError("smooth_l1: beta must be > 0");
  const double d = pred - target;
  if (std::abs(d) <= beta) return 0.5 * d * d / beta;
  return std::abs(d) - 0.5 * beta;
}

double lr_at(const LrSchedule& schedule, std::int64_t epoch) {
  const std::int64_t k = epoch / schedule.every;
  return schedule.base * std::pow(schedule.decay, static_cast<double>(k));
}

namespace {

inline void adam_update_slot(double& p, double& m, double& v, double g,
                             double lr, const AdamConfig& cfg, double bc1,
                             double bc2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
  const double m_hat = m / bc1;
  const double v_hat = v / bc2;
  p -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
}

}  // namespace

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads, double lr,
               const AdamConfig& cfg) {
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam_update_slot(params[i], state.first_moment[i], state.second_moment[i],
                     grads[i], lr, cfg, bc1, bc2);
  }
}

void adam_step_masked(AdamState& state, std::span<double> params,
                      std::span<const double> grads,
                      std::span<const int> slots, double lr,
                      const AdamConfig& cfg) {
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const int i = slots[k];
    adam_update_slot(params[i], state.first_moment[i], state.second_moment[i],
                     grads[k], lr, cfg, bc1, bc2);
  }
}

}  // namespace incnerf::ad
