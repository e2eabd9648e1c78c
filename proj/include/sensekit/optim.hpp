// Copyright 2026 The sensekit Authors. All Rights Reserved.
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

#pragma once

#include <cmath>
#include <cstdint>

#include "sensekit/error.hpp"
#include "sensekit/types.hpp"

namespace sensekit {

struct AdamWConfig {
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar = double>
struct OptimizerState {
  VectorX<Scalar> first_moment;
  VectorX<Scalar> second_moment;
  std::int64_t step = 0;

  OptimizerState() = default;
  explicit OptimizerState(Index n)
      : first_moment(VectorX<Scalar>::Zero(n)), second_moment(VectorX<Scalar>::Zero(n)) {}
};

/// One AdamW update in place. The decay term lr * weight_decay * params is
/// applied to the parameters directly and never enters the moment estimates.
template <typename Scalar, typename ParamDerived, typename GradDerived>
void adamw_step(OptimizerState<Scalar>& state, Eigen::MatrixBase<ParamDerived>& params,
                const Eigen::MatrixBase<GradDerived>& grads, Scalar lr,
                const AdamWConfig& config) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw UsageError("adamw_step: shape mismatch (params " + std::to_string(params.size()) +
                     ", grads " + std::to_string(grads.size()) + ", state " +
                     std::to_string(state.first_moment.size()) + ")");
  }
  ++state.step;
  const Scalar b1 = static_cast<Scalar>(config.beta1);
  const Scalar b2 = static_cast<Scalar>(config.beta2);
  state.first_moment = b1 * state.first_moment + (Scalar(1) - b1) * grads;
  state.second_moment =
      b2 * state.second_moment + (Scalar(1) - b2) * grads.cwiseAbs2();

  const auto t = static_cast<Scalar>(state.step);
  const Scalar bc1 = Scalar(1) - std::pow(b1, t);
  const Scalar bc2 = Scalar(1) - std::pow(b2, t);
  const auto update = (state.first_moment.array() / bc1) /
                      ((state.second_moment.array() / bc2).sqrt() +
                       static_cast<Scalar>(config.epsilon));
  params.derived().array() = params.derived().array() * (Scalar(1) - lr * static_cast<Scalar>(config.weight_decay)) -
                             lr * update;
}

template <typename Scalar, typename ParamDerived, typename GradDerived>
void adamw_step(OptimizerState<Scalar>& state, Eigen::MatrixBase<ParamDerived>&& params,
                const Eigen::MatrixBase<GradDerived>& grads, Scalar lr,
                const AdamWConfig& config) {
  adamw_step(state, params, grads, lr, config);
}

/// Number of warmup steps: ceil(fraction * total), guarded against the
/// representation error of fractions such as 0.1.
inline std::int64_t warmup_steps(std::int64_t total_steps, double warmup_fraction) {
  return static_cast<std::int64_t>(
      std::ceil(warmup_fraction * static_cast<double>(total_steps) - 1e-9));
}

/// Linear ramp 0 -> base_lr over the warmup steps, then linear decay to 0 at
/// total_steps.
template <typename Scalar = double>
Scalar schedule_lr(std::int64_t step, std::int64_t total_steps, Scalar base_lr,
                   double warmup_fraction) {
  if (total_steps < 1) throw UsageError("schedule_lr: total_steps must be >= 1");
  if (step < 0 || step > total_steps) {
    throw UsageError("schedule_lr: step " + std::to_string(step) + " outside [0, " +
                     std::to_string(total_steps) + "]");
  }
  const std::int64_t warmup = warmup_steps(total_steps, warmup_fraction);
  if (warmup > 0 && step <= warmup) {
    return base_lr * static_cast<Scalar>(step) / static_cast<Scalar>(warmup);
  }
  return base_lr * static_cast<Scalar>(total_steps - step) /
         static_cast<Scalar>(total_steps - warmup);
}

}  // namespace sensekit
