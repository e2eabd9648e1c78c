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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "sensekit/dataset.hpp"
#include "sensekit/optim.hpp"
#include "sensekit/scorer.hpp"

namespace sensekit {

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 1e-4;
  double weight_decay = 1e-2;
  double dropout = 0.1;
  int batch_size = 32;
  double warmup_fraction = 0.10;
  std::uint64_t seed = 0;
  double adam_epsilon = 1e-8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  std::size_t max_seq_len = kDefaultMaxSeqLen;
  ToyDims dims{};
  Markers markers{};

  /// Throws UsageError on out-of-range values.
  void validate() const;
  AdamWConfig adamw() const {
    return {weight_decay, adam_beta1, adam_beta2, adam_epsilon};
  }
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  std::optional<double> dev_accuracy;  // absent without a dev split
  double learning_rate = 0;            // lr of the last update in the epoch
};

struct TrainResult {
  ToyScorerParams<double> params;
  std::vector<EpochRecord> trace;
  int selected_epoch = 0;
  double train_accuracy = 0;  // of the selected params, eval mode
};

/// Eval-mode accuracy of the toy scorer on encoded samples.
double evaluate_accuracy(const ToyScorerParams<double>& params,
                         std::span<const EncodedSample> samples);

/// Mini-batch AdamW training with the warmup/decay schedule. Shuffles per
/// epoch from the configured seed and returns the parameters of the epoch
/// with the best dev accuracy (earliest on ties; last epoch without dev data).
TrainResult train_scorer(std::span<const Sample> train, std::span<const Sample> dev,
                         const TrainConfig& config);

nlohmann::json trace_to_json(std::span<const EpochRecord> trace);

}  // namespace sensekit
