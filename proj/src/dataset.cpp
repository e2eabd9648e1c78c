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

#include "sensekit/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "sensekit/csv.hpp"
#include "sensekit/error.hpp"

namespace sensekit {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string location(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

// Answer strings keyed by sample id, from either an inline column or a
// companion file.
class AnswerKey {
 public:
  AnswerKey(const CsvTable& data, const FormatConfig& config) {
    if (config.answer_column) {
      column_ = data.column(*config.answer_column);
      return;
    }
    if (!config.answer_file) {
      throw DataError("format config declares neither answer_column nor answer_file");
    }
    const CsvTable key =
        read_csv(*config.answer_file, config.delimiter, config.answer_file_header);
    for (std::size_t r = 0; r < key.rows.size(); ++r) {
      const auto& row = key.rows[r];
      if (row.size() < 2) {
        throw DataError(location(*config.answer_file, key.line_numbers[r]) +
                        ": answer row needs (id, answer)");
      }
      std::string id(trim(row[0]));
      if (!by_id_.emplace(id, std::string(trim(row[1]))).second) {
        throw DataError(location(*config.answer_file, key.line_numbers[r]) +
                        ": duplicate id '" + id + "' in answer file");
      }
    }
  }

  std::string lookup(const std::vector<std::string>& row, const std::string& id,
                     const std::string& where) const {
    if (column_) return std::string(trim(row[*column_]));
    auto it = by_id_.find(id);
    if (it == by_id_.end()) {
      throw DataError(where + ": row '" + id + "' has no entry in the answer file");
    }
    return it->second;
  }

  std::optional<std::size_t> column() const { return column_; }

 private:
  std::optional<std::size_t> column_;
  std::map<std::string, std::string> by_id_;
};

std::optional<int> parse_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Shared row walk: checks widths, duplicate ids and empty cells.
template <typename Build>
void for_each_row(const std::filesystem::path& path, const CsvTable& table,
                  std::size_t id_col, const std::vector<std::size_t>& text_cols,
                  Build&& build) {
  std::set<std::string> seen;
  std::size_t width = id_col;
  for (auto c : text_cols) width = std::max(width, c);

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = location(path, table.line_numbers[r]);
    if (row.size() <= width) {
      throw DataError(where + ": expected at least " + std::to_string(width + 1) +
                      " cells, found " + std::to_string(row.size()));
    }
    std::string id(trim(row[id_col]));
    if (id.empty()) throw DataError(where + ": empty id");
    if (!seen.insert(id).second) throw DataError(where + ": duplicate id '" + id + "'");
    for (auto c : text_cols) {
      if (trim(row[c]).empty()) {
        throw DataError(where + ": row '" + id + "' has an empty '" + table.header[c] +
                        "' cell");
      }
    }
    build(row, id, where);
  }
}

}  // namespace

const std::string& sample_id(const Sample& sample) {
  return std::visit([](const auto& s) -> const std::string& { return s.id; }, sample);
}

Label gold_label(const Sample& sample) {
  if (auto* v = std::get_if<ValidationSample>(&sample)) return v->sensical_index;
  return std::get<ExplanationSample>(sample).correct_index;
}

std::size_t choice_count(const Sample& sample) {
  return std::holds_alternative<ValidationSample>(sample) ? 2 : 3;
}

Task task_of(const Sample& sample) {
  return std::holds_alternative<ValidationSample>(sample) ? Task::validation
                                                          : Task::explanation;
}

Task parse_task(std::string_view name) {
  if (name == "validation") return Task::validation;
  if (name == "explanation") return Task::explanation;
  throw UsageError("unknown task '" + std::string(name) +
                   "' (expected validation or explanation)");
}

std::string_view task_name(Task task) {
  return task == Task::validation ? "validation" : "explanation";
}

FormatConfig format_config_from_json(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir) {
  FormatConfig config;
  try {
    if (j.contains("delimiter")) {
      const auto d = j.at("delimiter").get<std::string>();
      if (d.size() != 1) throw DataError("format config: delimiter must be one character");
      config.delimiter = d[0];
    }
    config.id_column = j.value("id_column", config.id_column);
    if (j.contains("statement_columns")) {
      config.statement_columns = j.at("statement_columns").get<std::array<std::string, 2>>();
    }
    config.false_statement_column =
        j.value("false_statement_column", config.false_statement_column);
    if (j.contains("option_columns")) {
      config.option_columns = j.at("option_columns").get<std::array<std::string, 3>>();
    }
    if (j.contains("answer_column")) config.answer_column = j.at("answer_column").get<std::string>();
    if (j.contains("answer_file")) {
      std::filesystem::path p = j.at("answer_file").get<std::string>();
      config.answer_file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    config.answer_file_header = j.value("answer_file_header", false);
    if (j.contains("answer_convention")) {
      const auto c = j.at("answer_convention").get<std::string>();
      if (c == "sensical") {
        config.answer_convention = AnswerConvention::sensical;
      } else if (c == "nonsensical") {
        config.answer_convention = AnswerConvention::nonsensical;
      } else {
        throw DataError("format config: answer_convention must be 'sensical' or 'nonsensical'");
      }
    }
    if (j.contains("option_labels")) {
      config.option_labels = j.at("option_labels").get<std::array<std::string, 3>>();
    }
    config.markers.begin = j.value("begin_marker", config.markers.begin);
    config.markers.end = j.value("end_marker", config.markers.end);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("format config: ") + e.what());
  }
  if (config.answer_column && config.answer_file) {
    throw DataError("format config: answer_column and answer_file are mutually exclusive");
  }
  return config;
}

FormatConfig load_format_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open format config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return format_config_from_json(j, path.parent_path());
}

nlohmann::json to_json(const FormatConfig& config) {
  nlohmann::json j = {
      {"delimiter", std::string(1, config.delimiter)},
      {"id_column", config.id_column},
      {"statement_columns", config.statement_columns},
      {"false_statement_column", config.false_statement_column},
      {"option_columns", config.option_columns},
      {"answer_file_header", config.answer_file_header},
      {"answer_convention", config.answer_convention == AnswerConvention::sensical
                                ? "sensical"
                                : "nonsensical"},
      {"option_labels", config.option_labels},
      {"begin_marker", config.markers.begin},
      {"end_marker", config.markers.end},
  };
  if (config.answer_column) j["answer_column"] = *config.answer_column;
  if (config.answer_file) j["answer_file"] = config.answer_file->string();
  return j;
}

std::vector<ValidationSample> parse_validation_data(const std::filesystem::path& path,
                                                    const FormatConfig& config) {
  const CsvTable table = read_csv(path, config.delimiter);
  const std::size_t id_col = table.column(config.id_column);
  const std::size_t s0 = table.column(config.statement_columns[0]);
  const std::size_t s1 = table.column(config.statement_columns[1]);
  const AnswerKey answers(table, config);

  std::vector<std::size_t> cols{s0, s1};
  if (answers.column()) cols.push_back(*answers.column());

  std::vector<ValidationSample> out;
  out.reserve(table.rows.size());
  for_each_row(path, table, id_col, cols,
               [&](const std::vector<std::string>& row, const std::string& id,
                   const std::string& where) {
                 const std::string raw = answers.lookup(row, id, where);
                 const auto answer = parse_int(raw);
                 if (!answer || (*answer != 0 && *answer != 1)) {
                   throw DataError(where + ": row '" + id + "': label '" + raw +
                                   "' outside {0,1}");
                 }
                 ValidationSample s;
                 s.id = id;
                 s.statements = {std::string(trim(row[s0])), std::string(trim(row[s1]))};
                 s.sensical_index = config.answer_convention == AnswerConvention::sensical
                                        ? *answer
                                        : 1 - *answer;
                 out.push_back(std::move(s));
               });
  return out;
}

std::vector<ExplanationSample> parse_explanation_data(const std::filesystem::path& path,
                                                      const FormatConfig& config) {
  const CsvTable table = read_csv(path, config.delimiter);
  const std::size_t id_col = table.column(config.id_column);
  const std::size_t fs = table.column(config.false_statement_column);
  std::array<std::size_t, 3> opt{};
  for (std::size_t k = 0; k < 3; ++k) opt[k] = table.column(config.option_columns[k]);
  const AnswerKey answers(table, config);

  std::vector<std::size_t> cols{fs, opt[0], opt[1], opt[2]};
  if (answers.column()) cols.push_back(*answers.column());

  std::vector<ExplanationSample> out;
  out.reserve(table.rows.size());
  for_each_row(path, table, id_col, cols,
               [&](const std::vector<std::string>& row, const std::string& id,
                   const std::string& where) {
                 const std::string raw = answers.lookup(row, id, where);
                 const auto it =
                     std::find(config.option_labels.begin(), config.option_labels.end(), raw);
                 if (it == config.option_labels.end()) {
                   throw DataError(where + ": row '" + id + "': answer '" + raw +
                                   "' is not one of the option labels");
                 }
                 ExplanationSample s;
                 s.id = id;
                 s.false_statement = std::string(trim(row[fs]));
                 for (std::size_t k = 0; k < 3; ++k) s.options[k] = std::string(trim(row[opt[k]]));
                 s.correct_index = static_cast<Label>(it - config.option_labels.begin());
                 out.push_back(std::move(s));
               });
  return out;
}

std::vector<Sample> parse_data(const std::filesystem::path& path, const FormatConfig& config,
                               Task task) {
  std::vector<Sample> out;
  if (task == Task::validation) {
    for (auto& s : parse_validation_data(path, config)) out.emplace_back(std::move(s));
  } else {
    for (auto& s : parse_explanation_data(path, config)) out.emplace_back(std::move(s));
  }
  return out;
}

ReconstructedInput reconstruct_validation_input(std::string_view statement,
                                                const Markers& markers) {
  const auto body = trim(statement);
  if (body.empty()) throw DataError("cannot reconstruct an empty statement");
  ReconstructedInput in;
  in.text = markers.begin + " If " + std::string(body) + " is in common sense? " + markers.end;
  in.begin_marker = markers.begin;
  in.end_marker = markers.end;
  return in;
}

ReconstructedInput reconstruct_explanation_input(std::string_view false_statement,
                                                 std::string_view option,
                                                 const Markers& markers) {
  const auto fs = trim(false_statement);
  const auto op = trim(option);
  if (fs.empty()) throw DataError("cannot reconstruct with an empty false statement");
  if (op.empty()) throw DataError("cannot reconstruct with an empty explanation option");
  ReconstructedInput in;
  in.text = markers.begin + " " + std::string(fs) + " does not make sense because " +
            std::string(op) + " " + markers.end;
  in.begin_marker = markers.begin;
  in.end_marker = markers.end;
  return in;
}

std::vector<ReconstructedInput> reconstruct_choices(const Sample& sample,
                                                    const Markers& markers) {
  std::vector<ReconstructedInput> out;
  if (auto* v = std::get_if<ValidationSample>(&sample)) {
    for (const auto& s : v->statements) out.push_back(reconstruct_validation_input(s, markers));
  } else {
    const auto& e = std::get<ExplanationSample>(sample);
    for (const auto& o : e.options) {
      out.push_back(reconstruct_explanation_input(e.false_statement, o, markers));
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].source_sample_id = sample_id(sample);
    out[k].choice_index = k;
  }
  return out;
}

TokenSequence tokenize(std::string_view text, std::size_t max_len) {
  TokenSequence seq;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      seq.tokens.push_back(std::move(current));
      current.clear();
    }
  };
  for (char c : text) {
    if (seq.tokens.size() >= max_len) break;
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::isspace(u)) {
      flush();
    } else if (u < 0x80 && std::ispunct(u)) {
      flush();
      seq.tokens.emplace_back(1, c);
    } else {
      current.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
    }
  }
  flush();
  if (seq.tokens.size() > max_len) seq.tokens.resize(max_len);
  return seq;
}

SplitStats dataset_stats(std::span<const Sample> samples, std::string split) {
  constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();
  std::array<std::string, 4> names{"sensical statements", "non-sensical statements",
                                   "correct reasons", "confusing reasons"};
  std::array<std::size_t, 4> counts{};
  std::array<std::size_t, 4> tokens{};
  auto add = [&](std::size_t category, const std::string& sentence) {
    ++counts[category];
    tokens[category] += tokenize(sentence, kUnbounded).size();
  };

  for (const auto& sample : samples) {
    if (auto* v = std::get_if<ValidationSample>(&sample)) {
      add(0, v->statements[v->sensical_index]);
      add(1, v->statements[1 - v->sensical_index]);
    } else {
      const auto& e = std::get<ExplanationSample>(sample);
      for (std::size_t k = 0; k < 3; ++k) {
        add(static_cast<Label>(k) == e.correct_index ? 2 : 3, e.options[k]);
      }
    }
  }

  SplitStats stats;
  stats.split = std::move(split);
  stats.sample_count = samples.size();
  for (std::size_t c = 0; c < names.size(); ++c) {
    CategoryStats cat{names[c], counts[c], std::nullopt};
    if (counts[c] > 0) {
      cat.mean_tokens = static_cast<double>(tokens[c]) / static_cast<double>(counts[c]);
    }
    stats.categories.push_back(std::move(cat));
  }
  return stats;
}

nlohmann::json to_json(const StatsReport& report) {
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& s : report.splits) {
    nlohmann::json cats = nlohmann::json::array();
    for (const auto& c : s.categories) {
      cats.push_back({{"name", c.name},
                      {"sentence_count", c.sentence_count},
                      {"mean_tokens", c.mean_tokens ? nlohmann::json(*c.mean_tokens)
                                                    : nlohmann::json(nullptr)}});
    }
    splits.push_back({{"split", s.split}, {"sample_count", s.sample_count}, {"categories", cats}});
  }
  return {{"splits", splits}};
}

std::string to_table(const StatsReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(26) << "category";
  for (const auto& s : report.splits) os << std::right << std::setw(12) << s.split;
  os << "\n" << std::left << std::setw(26) << "samples";
  for (const auto& s : report.splits) os << std::right << std::setw(12) << s.sample_count;
  os << "\n";
  if (report.splits.empty()) return os.str();
  for (std::size_t c = 0; c < report.splits.front().categories.size(); ++c) {
    os << std::left << std::setw(26) << report.splits.front().categories[c].name;
    for (const auto& s : report.splits) {
      const auto& mean = s.categories[c].mean_tokens;
      os << std::right << std::setw(12);
      if (mean) {
        os << std::fixed << std::setprecision(2) << *mean;
      } else {
        os << "-";
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace sensekit
