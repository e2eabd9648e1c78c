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

// Scripted scoring worker for the protocol tests.
//
//   mock_worker [mode]
//
// Modes: ok (default), reverse, bad_arity, error, no_ready, exit_early,
// garbage. Each text scores as its length in bytes.

#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

using nlohmann::json;

namespace {

json answer(const json& request, const std::string& mode) {
  json scores = json::array();
  for (const auto& t : request.at("texts")) scores.push_back(t.get<std::string>().size());
  if (mode == "bad_arity") scores.push_back(0);
  if (mode == "error") return {{"id", request.at("id")}, {"error", "model exploded"}};
  return {{"id", request.at("id")}, {"scores", scores}};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "ok";
  if (mode == "garbage") {
    std::cout << "{\"ready\": true}\nnot json\n" << std::flush;
    return 0;
  }
  if (mode != "no_ready") std::cout << json{{"ready", true}}.dump() << "\n" << std::flush;
  else std::cout << json{{"hello", 1}}.dump() << "\n" << std::flush;

  std::vector<json> pending;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    const json request = json::parse(line);
    if (mode == "exit_early") return 1;
    if (mode == "reverse") {
      pending.push_back(request);
      continue;
    }
    std::cout << answer(request, mode).dump() << "\n" << std::flush;
  }
  for (auto it = pending.rbegin(); it != pending.rend(); ++it) {
    std::cout << answer(*it, mode).dump() << "\n";
  }
  std::cout << std::flush;
  return 0;
}
