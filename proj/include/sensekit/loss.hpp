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

// Multiple-choice loss on score vectors: softmax cross-entropy written as
// logsumexp(x) - x[y], evaluated with max subtraction.

#include <cmath>
#include <span>
#include <string>

#include "sensekit/error.hpp"
#include "sensekit/types.hpp"

namespace sensekit {

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

template <typename Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> e = (x.array() - x.maxCoeff()).exp().matrix();
  return e / e.sum();
}

/// Negative log-likelihood of the true choice y. Non-negative for finite x.
template <typename Derived>
typename Derived::Scalar loss_single(const Eigen::MatrixBase<Derived>& x, Label y) {
  if (y < 0 || y >= x.size()) {
    throw UsageError("label " + std::to_string(y) + " out of range for " +
                     std::to_string(x.size()) + " choices");
  }
  return log_sum_exp(x) - x(y);
}

inline double loss_single(const ScoreVector& x, Label y) { return loss_single(x.scores, y); }

/// dL/dx = softmax(x) - onehot(y); the entries sum to zero.
template <typename Derived>
VectorX<typename Derived::Scalar> loss_gradient(const Eigen::MatrixBase<Derived>& x, Label y) {
  if (y < 0 || y >= x.size()) {
    throw UsageError("label " + std::to_string(y) + " out of range for " +
                     std::to_string(x.size()) + " choices");
  }
  auto g = softmax(x);
  g(y) -= 1;
  return g;
}

/// Mean of loss_single over the batch.
inline double loss_batch(std::span<const ScoreVector> xs, std::span<const Label> ys) {
  if (xs.empty()) throw UsageError("loss_batch: empty batch");
  if (xs.size() != ys.size()) {
    throw UsageError("loss_batch: " + std::to_string(xs.size()) + " score vectors but " +
                     std::to_string(ys.size()) + " labels");
  }
  double total = 0;
  for (std::size_t j = 0; j < xs.size(); ++j) total += loss_single(xs[j].scores, ys[j]);
  return total / static_cast<double>(xs.size());
}

}  // namespace sensekit
