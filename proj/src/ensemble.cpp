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

#include "sensekit/ensemble.hpp"

#include <fstream>

#include "sensekit/loss.hpp"

namespace sensekit {

ScoreVector ScoreMatrix::at(const std::string& id) const {
  auto it = rows.find(id);
  if (it == rows.end()) {
    throw DataError("backend '" + backend_id + "' has no scores for id '" + id + "'");
  }
  return {id, backend_id, it->second};
}

std::vector<std::string> ScoreMatrix::ids() const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& [id, _] : rows) out.push_back(id);
  return out;
}

VectorXd EnsembleWeights::normalized() const {
  const double total = weights.sum();
  if (!(total > 0)) return weights;
  return weights / total;
}

void EnsembleWeights::validate() const {
  if (weights.size() == 0) throw DataError("ensemble weights: empty weight vector");
  if (!weights.allFinite() || (weights.array() < 0).any() || (weights.array() > 1).any()) {
    throw DataError("ensemble weights: every weight must lie in [0, 1]");
  }
  if ((weights.array() == 0).all()) throw NumericError("ensemble weights: all weights are zero");
  if (!backend_ids.empty() && static_cast<Index>(backend_ids.size()) != weights.size()) {
    throw DataError("ensemble weights: " + std::to_string(backend_ids.size()) +
                    " backend ids for " + std::to_string(weights.size()) + " weights");
  }
}

nlohmann::json to_json(const EnsembleWeights& w) {
  nlohmann::json j = {
      {"weights", std::vector<double>(w.weights.data(), w.weights.data() + w.weights.size())},
      {"backends", w.backend_ids},
      {"dev_accuracy", w.dev_accuracy},
      {"seed", w.seed},
  };
  if (!w.single_dev_accuracies.empty()) j["single_dev_accuracies"] = w.single_dev_accuracies;
  return j;
}

EnsembleWeights weights_from_json(const nlohmann::json& j) {
  EnsembleWeights w;
  try {
    const auto v = j.at("weights").get<std::vector<double>>();
    w.weights = Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
    w.backend_ids = j.at("backends").get<std::vector<std::string>>();
    w.dev_accuracy = j.value("dev_accuracy", 0.0);
    w.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("single_dev_accuracies")) {
      w.single_dev_accuracies = j.at("single_dev_accuracies").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("weights file: ") + e.what());
  }
  w.validate();
  return w;
}

EnsembleWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open weights file '" + path.string() + "'");
  try {
    return weights_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ScoreVector combine_scores(const EnsembleWeights& weights, std::span<const ScoreVector> xs) {
  if (static_cast<Index>(xs.size()) != weights.weights.size()) {
    throw UsageError("combine_scores: " + std::to_string(xs.size()) + " score vectors for " +
                     std::to_string(weights.weights.size()) + " weights");
  }
  if (xs.empty()) throw UsageError("combine_scores: no score vectors");
  ScoreVector out{xs[0].sample_id, "ensemble", VectorXd::Zero(xs[0].size())};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != out.size()) {
      throw DataError("combine_scores: score vector lengths differ (" +
                      std::to_string(out.size()) + " vs " + std::to_string(xs[i].size()) + ")");
    }
    if (!weights.backend_ids.empty() && !xs[i].backend.empty() &&
        xs[i].backend != weights.backend_ids[i]) {
      throw DataError("combine_scores: position " + std::to_string(i) + " holds backend '" +
                      xs[i].backend + "' but the weights expect '" + weights.backend_ids[i] +
                      "'");
    }
    out.scores += weights.weights(static_cast<Index>(i)) * xs[i].scores;
  }
  return out;
}

Label majority_vote(std::span<const Label> labels, std::size_t fallback) {
  if (labels.empty()) throw UsageError("majority_vote: no labels");
  if (fallback >= labels.size()) throw UsageError("majority_vote: fallback out of range");
  for (Label candidate : labels) {
    std::size_t votes = 0;
    for (Label l : labels) votes += l == candidate;
    if (2 * votes > labels.size()) return candidate;
  }
  return labels[fallback];
}

ScoreMatrix transform_scores(const ScoreMatrix& m, ScoreTransform transform) {
  if (transform == ScoreTransform::raw) return m;
  ScoreMatrix out = m;
  for (auto& [_, row] : out.rows) row = softmax(row);
  return out;
}

std::vector<MatrixXd> align_matrices(std::span<const ScoreMatrix> matrices,
                                     const std::map<std::string, Label>& labels) {
  std::vector<MatrixXd> blocks;
  for (const auto& m : matrices) {
    if (m.rows.size() != labels.size()) {
      throw DataError("backend '" + m.backend_id + "' covers " + std::to_string(m.rows.size()) +
                      " samples but " + std::to_string(labels.size()) + " are labelled");
    }
    MatrixXd block(static_cast<Index>(labels.size()), m.choice_count);
    Index r = 0;
    for (const auto& [id, label] : labels) {
      auto it = m.rows.find(id);
      if (it == m.rows.end()) {
        throw DataError("backend '" + m.backend_id + "' has no scores for id '" + id + "'");
      }
      if (it->second.size() != m.choice_count) {
        throw DataError("backend '" + m.backend_id + "': id '" + id + "' has " +
                        std::to_string(it->second.size()) + " scores, expected " +
                        std::to_string(m.choice_count));
      }
      if (label < 0 || label >= m.choice_count) {
        throw DataError("label for id '" + id + "' out of range");
      }
      block.row(r++) = it->second.transpose();
    }
    if (!blocks.empty() && blocks.front().cols() != block.cols()) {
      throw DataError("backends disagree on the number of choices");
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

std::size_t count_correct(const VectorXd& w, std::span<const MatrixXd> blocks,
                          std::span<const Label> labels) {
  MatrixXd combined = MatrixXd::Zero(blocks.front().rows(), blocks.front().cols());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    combined += w(static_cast<Index>(i)) * blocks[i];
  }
  std::size_t correct = 0;
  for (Index r = 0; r < combined.rows(); ++r) {
    correct += predict_label(combined.row(r)) == labels[static_cast<std::size_t>(r)];
  }
  return correct;
}

std::vector<double> single_accuracies(std::span<const ScoreMatrix> matrices,
                                      const std::map<std::string, Label>& labels) {
  const auto blocks = align_matrices(matrices, labels);
  std::vector<Label> ys;
  for (const auto& [_, y] : labels) ys.push_back(y);
  std::vector<double> out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::size_t correct =
        count_correct(VectorXd::Ones(1), std::span<const MatrixXd>(&blocks[i], 1), ys);
    out.push_back(static_cast<double>(correct) / static_cast<double>(ys.size()));
  }
  return out;
}

FitResult fit_weights(std::span<const ScoreMatrix> matrices,
                      const std::map<std::string, Label>& dev_labels,
                      DEConfig<double> de_config) {
  if (dev_labels.empty()) throw DataError("fit_weights: empty dev set");
  if (matrices.empty()) throw UsageError("fit_weights: no backends");
  const auto blocks = align_matrices(matrices, dev_labels);
  std::vector<Label> ys;
  for (const auto& [_, y] : dev_labels) ys.push_back(y);
  const auto n = static_cast<Index>(matrices.size());
  const double total = static_cast<double>(ys.size());

  de_config.lower = VectorXd::Zero(n);
  de_config.upper = VectorXd::Ones(n);
  de_config.seed_points.clear();
  for (Index i = 0; i < n; ++i) de_config.seed_points.push_back(VectorXd::Unit(n, i));
  de_config.seed_points.push_back(VectorXd::Constant(n, 1.0 / static_cast<double>(n)));

  // The all-zero vector scores worse than any real weighting so it is never kept.
  auto objective = [&](const VectorXd& w) {
    if ((w.array() == 0).all()) return 2.0;
    return 1.0 - static_cast<double>(count_correct(w, blocks, ys)) / total;
  };
  FitResult out;
  out.search = de_minimize(objective, de_config);

  const VectorXd& best = out.search.best_x;
  if ((best.array() == 0).all()) throw NumericError("fit_weights: degenerate all-zero weights");
  out.weights.weights = best;
  out.weights.dev_accuracy = static_cast<double>(count_correct(best, blocks, ys)) / total;
  out.weights.seed = de_config.seed;
  for (const auto& m : matrices) out.weights.backend_ids.push_back(m.backend_id);
  out.weights.single_dev_accuracies = single_accuracies(matrices, dev_labels);
  return out;
}

}  // namespace sensekit
