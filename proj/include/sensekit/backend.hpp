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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sensekit/dataset.hpp"
#include "sensekit/ensemble.hpp"
#include "sensekit/scorer.hpp"
#include "sensekit/trainer.hpp"

namespace sensekit {

enum class BackendKind { toy, logits_file, external_worker };

/// Where one model's scores come from. `source` is a params file (toy), a
/// logits file, or a shell command that starts a worker.
struct ScorerBackend {
  BackendKind kind = BackendKind::logits_file;
  std::string id;
  std::string source;

  /// Parses "kind:id:source"; kind is toy, logits_file (or logits) or
  /// external_worker (or worker). The source may itself contain ':'.
  static ScorerBackend parse(std::string_view descriptor);
  std::string descriptor() const;
};

std::string_view backend_kind_name(BackendKind kind);

/// A trained toy scorer together with the configuration that produced it.
struct ToyModel {
  ToyScorerParams<double> params;
  TrainConfig config;
};

inline constexpr int kToyModelVersion = 1;

/// JSON document holding dims, seed, the full training config, any extra
/// metadata and the flat parameter vector.
void save_toy_model(const std::filesystem::path& path, const ToyModel& model,
                    const nlohmann::json& extra = nlohmann::json::object());
ToyModel load_toy_model(const std::filesystem::path& path);

/// Reads a line-delimited {"id", "scores"} file, keeping the requested ids.
/// Missing ids, duplicates and malformed lines are DataErrors.
ScoreMatrix read_logits_file(const std::filesystem::path& path, const std::string& backend_id,
                             std::span<const std::string> ids);
void write_logits_file(const std::filesystem::path& path, const ScoreMatrix& matrix);

struct LoadOptions {
  /// Overrides loading the toy backend's params from its source.
  const ToyModel* toy_model = nullptr;
  /// Markers for the reconstructed texts sent to a worker.
  Markers markers{};
};

/// Scores every sample with the backend. Rows are checked against each
/// sample's choice count.
ScoreMatrix load_score_matrix(const ScorerBackend& backend, std::span<const Sample> samples,
                              const LoadOptions& options = {});

}  // namespace sensekit
