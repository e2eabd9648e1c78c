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

// Line-delimited JSON protocol spoken with an external scoring worker.
//
//   worker -> {"ready": true}
//   client -> {"id": "...", "texts": ["...", ...]}
//   worker -> {"id": "...", "scores": [...]}   or   {"id": "...", "error": "..."}
//
// Responses may come back in any order and are matched by id.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sensekit/types.hpp"

namespace sensekit {

struct WorkerRequest {
  std::string id;
  std::vector<std::string> texts;
};

struct WorkerResponse {
  std::string id;
  std::optional<VectorXd> scores;
  std::optional<std::string> error;
};

std::string encode_request(const WorkerRequest& request);
/// Throws ProtocolError on anything that is not a well-formed response line.
WorkerResponse parse_response_line(const std::string& line);
bool is_ready_line(const std::string& line);

/// Child process running a shell command with piped stdin/stdout. stderr is
/// inherited. The destructor terminates a process that is still running.
class WorkerProcess {
 public:
  explicit WorkerProcess(const std::string& command);
  ~WorkerProcess();
  WorkerProcess(const WorkerProcess&) = delete;
  WorkerProcess& operator=(const WorkerProcess&) = delete;

  /// False once the write end is broken.
  bool write_line(const std::string& line);
  /// Next line without the trailing newline; nullopt at end of stream.
  std::optional<std::string> read_line();
  void close_input();
  void terminate();
  /// Waits for exit and returns the exit status (or -signal).
  int wait();

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  bool exited_ = false;
  int status_ = 0;
};

/// Sends every request to a fresh worker and collects one score vector per
/// id. Throws ProtocolError on protocol violations, worker-reported errors,
/// arity mismatches or an early exit.
std::map<std::string, VectorXd> score_with_worker(const std::string& command,
                                                  std::span<const WorkerRequest> requests);

}  // namespace sensekit
