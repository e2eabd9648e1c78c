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
#include <string>
#include <vector>

namespace sensekit {

/// A delimiter-separated table with a header row. Cells follow RFC 4180
/// quoting: quoted fields may contain delimiters, doubled quotes and newlines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based physical line on which each row starts, for diagnostics.
  std::vector<std::size_t> line_numbers;

  /// Column position by name; throws DataError naming the column if absent.
  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text, char delimiter, bool has_header = true);
CsvTable read_csv(const std::filesystem::path& path, char delimiter,
                  bool has_header = true);

}  // namespace sensekit
