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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sensekit/ensemble.hpp"
#include "sensekit/types.hpp"

namespace sensekit {

/// Whether each sample id was predicted correctly by one system.
using CorrectnessBitmap = std::map<std::string, bool>;

/// Fraction of ids whose predicted label matches gold. The key sets must
/// agree; a mismatch throws DataError listing the symmetric difference.
double accuracy(const std::map<std::string, Label>& predictions,
                const std::map<std::string, Label>& gold);

CorrectnessBitmap correctness(const std::map<std::string, Label>& predictions,
                              const std::map<std::string, Label>& gold);

/// Samples correct for exactly the member systems (alpha), and how many of
/// those the ensemble also got right (beta). `mask` bit i is system i.
struct VennRegion {
  std::uint32_t mask = 0;
  std::vector<std::string> members;
  std::size_t alpha = 0;
  std::size_t beta = 0;

  bool operator==(const VennRegion&) const = default;
};

struct VennReport {
  std::vector<std::string> systems;
  /// Ordered by member count then mask; the empty (none-correct) region last.
  std::vector<VennRegion> regions;

  const VennRegion& region(std::uint32_t mask) const;
  std::size_t total() const;
  bool operator==(const VennReport&) const = default;
};

/// Partitions the samples by which single systems were correct. Every bitmap
/// must cover the same ids.
VennReport overlap_analysis(std::span<const CorrectnessBitmap> singles,
                            const CorrectnessBitmap& ensemble,
                            std::span<const std::string> system_names = {});

nlohmann::json to_json(const VennReport& venn);
VennReport venn_from_json(const nlohmann::json& j);

struct SystemAccuracy {
  std::string system;
  double accuracy = 0;

  bool operator==(const SystemAccuracy&) const = default;
};

struct EvaluationReport {
  std::vector<SystemAccuracy> accuracies;
  std::optional<EnsembleWeights> weights;
  std::optional<VennReport> venn;
  /// Resolved run configuration, embedded verbatim.
  nlohmann::json config = nlohmann::json::object();
};

enum class ReportFormat { text, structured };

std::string render_report(const EvaluationReport& report, ReportFormat format);
/// Inverse of the structured rendering.
EvaluationReport parse_report(const std::string& structured);

}  // namespace sensekit
