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

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sensekit/types.hpp"

namespace sensekit {

inline constexpr std::size_t kDefaultMaxSeqLen = 50;

/// A pair of similar statements, one of which makes sense.
struct ValidationSample {
  std::string id;
  std::array<std::string, 2> statements;
  Label sensical_index = 0;
};

/// A false statement with three candidate explanations.
struct ExplanationSample {
  std::string id;
  std::string false_statement;
  std::array<std::string, 3> options;
  Label correct_index = 0;
};

using Sample = std::variant<ValidationSample, ExplanationSample>;

enum class Task { validation, explanation };

const std::string& sample_id(const Sample& sample);
Label gold_label(const Sample& sample);
std::size_t choice_count(const Sample& sample);
Task task_of(const Sample& sample);

Task parse_task(std::string_view name);
std::string_view task_name(Task task);

struct Markers {
  std::string begin = "[CLS]";
  std::string end = "[SEP]";
};

struct ReconstructedInput {
  std::string text;
  std::string begin_marker;
  std::string end_marker;
  std::string source_sample_id;
  std::size_t choice_index = 0;
};

struct TokenSequence {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const TokenSequence&) const = default;
};

/// Which value the answer key stores for a validation sample.
enum class AnswerConvention {
  sensical,     // index of the statement that makes sense
  nonsensical,  // index of the statement against common sense
};

/// Column mapping for benchmark files. The answer key is either a column of
/// the data file or a companion file whose first two columns are (id, answer).
struct FormatConfig {
  char delimiter = ',';
  std::string id_column = "id";
  std::array<std::string, 2> statement_columns{"sent0", "sent1"};
  std::string false_statement_column = "FalseSent";
  std::array<std::string, 3> option_columns{"OptionA", "OptionB", "OptionC"};

  std::optional<std::string> answer_column;
  std::optional<std::filesystem::path> answer_file;
  bool answer_file_header = false;

  AnswerConvention answer_convention = AnswerConvention::nonsensical;
  /// Answer strings naming explanation options, in option order.
  std::array<std::string, 3> option_labels{"A", "B", "C"};

  Markers markers;
};

/// Relative answer_file paths are resolved against the config file's directory.
FormatConfig load_format_config(const std::filesystem::path& path);
FormatConfig format_config_from_json(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const FormatConfig& config);

std::vector<ValidationSample> parse_validation_data(const std::filesystem::path& path,
                                                    const FormatConfig& config);
std::vector<ExplanationSample> parse_explanation_data(const std::filesystem::path& path,
                                                      const FormatConfig& config);
/// Dispatches on task and wraps the result as generic samples.
std::vector<Sample> parse_data(const std::filesystem::path& path, const FormatConfig& config,
                               Task task);

ReconstructedInput reconstruct_validation_input(std::string_view statement,
                                                const Markers& markers = {});
ReconstructedInput reconstruct_explanation_input(std::string_view false_statement,
                                                 std::string_view option,
                                                 const Markers& markers = {});
/// One reconstructed input per choice, in choice order, tagged with the sample id.
std::vector<ReconstructedInput> reconstruct_choices(const Sample& sample,
                                                    const Markers& markers = {});

/// Lowercases ASCII letters, splits on whitespace and emits each ASCII
/// punctuation character as its own token. Keeps at most max_len tokens.
TokenSequence tokenize(std::string_view text, std::size_t max_len = kDefaultMaxSeqLen);

struct CategoryStats {
  std::string name;
  std::size_t sentence_count = 0;
  std::optional<double> mean_tokens;  // absent when sentence_count == 0
};

struct SplitStats {
  std::string split;
  std::size_t sample_count = 0;
  std::vector<CategoryStats> categories;
};

struct StatsReport {
  std::vector<SplitStats> splits;
};

/// Token-length statistics over raw sentences (no templates, no truncation).
/// Categories: sensical / non-sensical statements, correct / confusing reasons.
SplitStats dataset_stats(std::span<const Sample> samples, std::string split = "data");

nlohmann::json to_json(const StatsReport& report);
std::string to_table(const StatsReport& report);

}  // namespace sensekit
