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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sensekit/de.hpp"
#include "sensekit/types.hpp"

namespace sensekit {

/// Index of the largest score; ties go to the lowest index.
template <typename Derived>
Label predict_label(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() == 0) throw UsageError("predict_label: empty score vector");
  Index best = 0;
  for (Index k = 1; k < x.size(); ++k) {
    if (x(k) > x(best)) best = k;
  }
  return static_cast<Label>(best);
}

inline Label predict_label(const ScoreVector& x) { return predict_label(x.scores); }

/// One backend's scores over a set of samples, keyed by sample id.
struct ScoreMatrix {
  std::string backend_id;
  Index choice_count = 0;
  std::map<std::string, VectorXd> rows;

  ScoreVector at(const std::string& id) const;
  std::vector<std::string> ids() const;
};

struct EnsembleWeights {
  VectorXd weights;
  double dev_accuracy = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> backend_ids;
  /// Dev accuracy of each backend alone, in backend order (may be empty).
  std::vector<double> single_dev_accuracies;

  /// Weights rescaled to sum to one, for display.
  VectorXd normalized() const;
  void validate() const;
};

nlohmann::json to_json(const EnsembleWeights& w);
EnsembleWeights weights_from_json(const nlohmann::json& j);
EnsembleWeights load_weights(const std::filesystem::path& path);

/// x = sum_i w_i * x_i. When both the weights and a score vector carry
/// backend ids they must agree position by position.
ScoreVector combine_scores(const EnsembleWeights& weights, std::span<const ScoreVector> xs);

/// Strict-majority label, else the label of the fallback backend.
Label majority_vote(std::span<const Label> per_model_labels, std::size_t fallback);

enum class ScoreTransform { raw, softmax };

/// Applies the transform row by row.
ScoreMatrix transform_scores(const ScoreMatrix& m, ScoreTransform transform);

/// Checks that all matrices cover exactly the label ids with one uniform
/// choice count, and returns them stacked as (samples x choices) blocks in
/// the order of the label map.
std::vector<MatrixXd> align_matrices(std::span<const ScoreMatrix> matrices,
                                     const std::map<std::string, Label>& labels);

/// Correct predictions of sum_i w_i * blocks[i] against labels.
std::size_t count_correct(const VectorXd& w, std::span<const MatrixXd> blocks,
                          std::span<const Label> labels);

/// Accuracy of each backend alone on the labelled ids.
std::vector<double> single_accuracies(std::span<const ScoreMatrix> matrices,
                                      const std::map<std::string, Label>& labels);

struct FitResult {
  EnsembleWeights weights;
  DEResult<double> search;
};

/// Minimizes 1 - dev accuracy over [0,1]^n with DE. The unit vectors and the
/// uniform vector are injected into the initial population, so the result is
/// never worse than the best single backend on the dev split. The config's
/// bounds and seed points are replaced.
FitResult fit_weights(std::span<const ScoreMatrix> matrices,
                      const std::map<std::string, Label>& dev_labels,
                      DEConfig<double> de_config);

}  // namespace sensekit
