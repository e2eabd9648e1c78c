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

#include "sensekit/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "sensekit/ensemble.hpp"

namespace sensekit {

void TrainConfig::validate() const {
  auto in_unit = [](double v) { return v > 0 && v <= 1; };
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (batch_size < 1) throw UsageError("batch size must be >= 1");
  if (!in_unit(learning_rate)) throw UsageError("learning rate must be in (0, 1]");
  if (weight_decay < 0 || weight_decay > 1) throw UsageError("weight decay must be in [0, 1]");
  if (dropout < 0 || dropout >= 1) throw UsageError("dropout must be in [0, 1)");
  if (warmup_fraction < 0 || warmup_fraction > 1) {
    throw UsageError("warmup fraction must be in [0, 1]");
  }
  if (!in_unit(adam_epsilon)) throw UsageError("adam epsilon must be in (0, 1]");
  if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1) {
    throw UsageError("adam betas must be in [0, 1)");
  }
  if (max_seq_len < 1) throw UsageError("max sequence length must be >= 1");
  if (dims.dim < 1 || dims.hidden < 1 || dims.buckets < 1) {
    throw UsageError("toy scorer dimensions must all be >= 1");
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"epochs", c.epochs},
      {"learning_rate", c.learning_rate},
      {"weight_decay", c.weight_decay},
      {"dropout", c.dropout},
      {"batch_size", c.batch_size},
      {"warmup_fraction", c.warmup_fraction},
      {"seed", c.seed},
      {"adam_epsilon", c.adam_epsilon},
      {"adam_betas", {c.adam_beta1, c.adam_beta2}},
      {"max_seq_len", c.max_seq_len},
      {"dims", {{"dim", c.dims.dim}, {"hidden", c.dims.hidden}, {"buckets", c.dims.buckets}}},
      {"begin_marker", c.markers.begin},
      {"end_marker", c.markers.end},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.dropout = j.value("dropout", c.dropout);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
  c.seed = j.value("seed", c.seed);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  if (j.contains("adam_betas")) {
    c.adam_beta1 = j.at("adam_betas").at(0).get<double>();
    c.adam_beta2 = j.at("adam_betas").at(1).get<double>();
  }
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  if (j.contains("dims")) {
    const auto& d = j.at("dims");
    c.dims = {d.at("dim").get<Index>(), d.at("hidden").get<Index>(),
              d.at("buckets").get<Index>()};
  }
  c.markers.begin = j.value("begin_marker", c.markers.begin);
  c.markers.end = j.value("end_marker", c.markers.end);
  return c;
}

double evaluate_accuracy(const ToyScorerParams<double>& params,
                         std::span<const EncodedSample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    if (predict_label(forward_encoded(params, s)) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

TrainResult train_scorer(std::span<const Sample> train, std::span<const Sample> dev,
                         const TrainConfig& config) {
  config.validate();
  if (train.empty()) throw UsageError("train_scorer: empty training set");

  const auto train_set =
      encode_samples(train, config.dims.buckets, config.max_seq_len, config.markers);
  const auto dev_set =
      encode_samples(dev, config.dims.buckets, config.max_seq_len, config.markers);

  Rng rng(config.seed);
  ToyScorerParams<double> params = init_params(config.dims, rng());
  OptimizerState<double> state(params.size());
  const AdamWConfig adamw = config.adamw();

  const auto n = static_cast<std::int64_t>(train_set.size());
  const std::int64_t batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::int64_t total_steps = batches_per_epoch * config.epochs;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EncodedSample> batch;

  TrainResult result;
  std::optional<double> best_dev;
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    double lr = 0;
    for (std::int64_t b = 0; b < batches_per_epoch; ++b) {
      const auto begin = static_cast<std::size_t>(b * config.batch_size);
      const auto end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(train_set[order[i]]);

      auto grad = backward(params, std::span<const EncodedSample>(batch), config.dropout, &rng);
      loss_sum += grad.loss * static_cast<double>(batch.size());
      lr = schedule_lr(step, total_steps, config.learning_rate, config.warmup_fraction);
      adamw_step(state, params.values(), grad.grads.values(), lr, adamw);
      ++step;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.learning_rate = lr;
    if (!dev_set.empty()) rec.dev_accuracy = evaluate_accuracy(params, dev_set);
    result.trace.push_back(rec);

    const bool better = dev_set.empty() || !best_dev || *rec.dev_accuracy > *best_dev;
    if (better) {
      best_dev = rec.dev_accuracy;
      result.params = params;
      result.selected_epoch = epoch;
    }
  }
  result.train_accuracy = evaluate_accuracy(result.params, train_set);
  return result;
}

nlohmann::json trace_to_json(std::span<const EpochRecord> trace) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : trace) {
    rows.push_back({{"epoch", r.epoch},
                    {"train_loss", r.train_loss},
                    {"dev_accuracy", r.dev_accuracy ? nlohmann::json(*r.dev_accuracy)
                                                    : nlohmann::json(nullptr)},
                    {"lr", r.learning_rate}});
  }
  return rows;
}

}  // namespace sensekit
