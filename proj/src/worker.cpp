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

#include "sensekit/worker.hpp"

#include <csignal>
#include <cerrno>
#include <chrono>
#include <set>
#include <thread>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "sensekit/error.hpp"

namespace sensekit {

std::string encode_request(const WorkerRequest& request) {
  return nlohmann::json{{"id", request.id}, {"texts", request.texts}}.dump();
}

bool is_ready_line(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    return j.is_object() && j.contains("ready") && j.at("ready") == true;
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

WorkerResponse parse_response_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError("worker sent a non-JSON line: " + line.substr(0, 200));
  }
  if (!j.is_object() || !j.contains("id") || !j.at("id").is_string()) {
    throw ProtocolError("worker response lacks a string id: " + line.substr(0, 200));
  }
  WorkerResponse r;
  r.id = j.at("id").get<std::string>();
  if (j.contains("error")) {
    r.error = j.at("error").is_string() ? j.at("error").get<std::string>() : j.at("error").dump();
    return r;
  }
  if (!j.contains("scores") || !j.at("scores").is_array()) {
    throw ProtocolError("worker response for '" + r.id + "' has neither scores nor error");
  }
  const auto& arr = j.at("scores");
  VectorXd v(static_cast<Index>(arr.size()));
  for (std::size_t k = 0; k < arr.size(); ++k) {
    if (!arr[k].is_number()) {
      throw ProtocolError("worker response for '" + r.id + "' has a non-numeric score");
    }
    v(static_cast<Index>(k)) = arr[k].get<double>();
  }
  if (!v.allFinite()) throw ProtocolError("worker response for '" + r.id + "' has non-finite scores");
  r.scores = std::move(v);
  return r;
}

WorkerProcess::WorkerProcess(const std::string& command) {
  // A worker that dies mid-write must surface as EPIPE, not kill us.
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw ProtocolError("cannot create worker pipe");
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ProtocolError("cannot create worker pipe");
  }
  pid_ = fork();
  if (pid_ < 0) throw ProtocolError("cannot fork worker process");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

WorkerProcess::~WorkerProcess() {
  close_input();
  if (from_child_ >= 0) ::close(from_child_);
  if (!exited_ && pid_ > 0) {
    kill(pid_, SIGTERM);
    waitpid(pid_, nullptr, 0);
  }
}

bool WorkerProcess::write_line(const std::string& line) {
  if (to_child_ < 0) return false;
  std::string data = line + "\n";
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const ssize_t n = ::write(to_child_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::string> WorkerProcess::read_line() {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void WorkerProcess::terminate() {
  if (!exited_ && pid_ > 0) kill(pid_, SIGTERM);
}

void WorkerProcess::close_input() {
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
}

int WorkerProcess::wait() {
  if (exited_) return status_;
  int raw = 0;
  while (waitpid(pid_, &raw, 0) < 0 && errno == EINTR) {
  }
  exited_ = true;
  status_ = WIFEXITED(raw) ? WEXITSTATUS(raw) : -WTERMSIG(raw);
  return status_;
}

std::map<std::string, VectorXd> score_with_worker(const std::string& command,
                                                  std::span<const WorkerRequest> requests) {
  std::map<std::string, std::size_t> arity;
  for (const auto& r : requests) {
    if (!arity.emplace(r.id, r.texts.size()).second) {
      throw UsageError("duplicate request id '" + r.id + "'");
    }
  }

  WorkerProcess worker(command);
  auto first = worker.read_line();
  while (first && first->empty()) first = worker.read_line();
  if (!first) {
    throw ProtocolError("worker exited before signalling readiness (status " +
                        std::to_string(worker.wait()) + ")");
  }
  if (!is_ready_line(*first)) {
    throw ProtocolError("worker's first line is not {\"ready\": true}: " + first->substr(0, 200));
  }

  // Requests are written from a second thread so a worker that answers
  // before reading everything cannot fill both pipes and stall.
  std::thread writer([&] {
    for (const auto& r : requests) {
      if (!worker.write_line(encode_request(r))) break;
    }
    worker.close_input();
  });
  struct JoinOnExit {
    std::thread& t;
    WorkerProcess& w;
    ~JoinOnExit() {
      if (!t.joinable()) return;
      w.terminate();  // unblocks a pending write
      t.join();
    }
  } join{writer, worker};

  std::map<std::string, VectorXd> out;
  while (out.size() < requests.size()) {
    auto line = worker.read_line();
    if (!line) {
      throw ProtocolError("worker closed its output with " +
                          std::to_string(requests.size() - out.size()) +
                          " requests unanswered");
    }
    if (line->empty()) continue;
    auto response = parse_response_line(*line);
    auto it = arity.find(response.id);
    if (it == arity.end()) throw ProtocolError("worker answered unknown id '" + response.id + "'");
    if (response.error) {
      throw ProtocolError("worker reported an error for '" + response.id + "': " + *response.error);
    }
    if (static_cast<std::size_t>(response.scores->size()) != it->second) {
      throw ProtocolError("worker returned " + std::to_string(response.scores->size()) +
                          " scores for '" + response.id + "' which has " +
                          std::to_string(it->second) + " texts");
    }
    if (!out.emplace(response.id, std::move(*response.scores)).second) {
      throw ProtocolError("worker answered '" + response.id + "' twice");
    }
  }
  writer.join();
  worker.close_input();
  worker.wait();
  return out;
}

}  // namespace sensekit
