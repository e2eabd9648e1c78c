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

#include <gtest/gtest.h>

#include "sensekit/backend.hpp"
#include "sensekit/worker.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

namespace sensekit {
namespace {

using testing::TempDir;

std::string mock(const std::string& mode) {
  return std::string("'") + SENSEKIT_MOCK_WORKER + "' " + mode;
}

std::vector<std::string> ids_of(std::span<const Sample> samples) {
  std::vector<std::string> ids;
  for (const auto& s : samples) ids.push_back(sample_id(s));
  return ids;
}

TEST(BackendDescriptor, Parse) {
  const auto b = ScorerBackend::parse("logits:m1:/tmp/a.jsonl");
  EXPECT_EQ(b.kind, BackendKind::logits_file);
  EXPECT_EQ(b.id, "m1");
  EXPECT_EQ(b.source, "/tmp/a.jsonl");
  EXPECT_EQ(b.descriptor(), "logits_file:m1:/tmp/a.jsonl");

  const auto w = ScorerBackend::parse("worker:big:python -m x --url http://h:8/");
  EXPECT_EQ(w.kind, BackendKind::external_worker);
  EXPECT_EQ(w.source, "python -m x --url http://h:8/");
  EXPECT_EQ(ScorerBackend::parse("toy:t:p.json").kind, BackendKind::toy);

  EXPECT_THROW(ScorerBackend::parse("toy:t"), UsageError);
  EXPECT_THROW(ScorerBackend::parse("gpu:t:x"), UsageError);
  EXPECT_THROW(ScorerBackend::parse("toy::x"), UsageError);
  EXPECT_THROW(ScorerBackend::parse("toy:t:"), UsageError);
}

TEST(LogitsFile, ReadsRequestedIdsOnly) {
  TempDir dir;
  const auto p = dir.write("m.jsonl",
                           "{\"id\": \"a\", \"scores\": [0.1, 0.9]}\n"
                           "\n"
                           "{\"id\": \"b\", \"scores\": [2, -1]}\n"
                           "{\"id\": \"extra\", \"scores\": [0, 0]}\n");
  const std::vector<std::string> ids{"a", "b"};
  const auto m = read_logits_file(p, "m", ids);
  EXPECT_EQ(m.rows.size(), 2u);
  EXPECT_EQ(m.backend_id, "m");
  EXPECT_EQ(m.choice_count, 2);
  EXPECT_DOUBLE_EQ(m.rows.at("b")(1), -1);
}

TEST(LogitsFile, Errors) {
  TempDir dir;
  const std::vector<std::string> ids{"a", "b"};
  const auto missing = dir.write("missing.jsonl", "{\"id\": \"a\", \"scores\": [1, 2]}\n");
  try {
    read_logits_file(missing, "m", ids);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(" b"), std::string::npos) << e.what();
  }
  const auto dup = dir.write("dup.jsonl",
                             "{\"id\": \"a\", \"scores\": [1, 2]}\n"
                             "{\"id\": \"a\", \"scores\": [1, 2]}\n"
                             "{\"id\": \"b\", \"scores\": [1, 2]}\n");
  EXPECT_THROW(read_logits_file(dup, "m", ids), DataError);
  const auto bad = dir.write("bad.jsonl", "{\"id\": \"a\", \"scores\": [1, 2]}\n{oops\n");
  EXPECT_THROW(read_logits_file(bad, "m", ids), DataError);
  const auto nan = dir.write("nan.jsonl",
                             "{\"id\": \"a\", \"scores\": [1, null]}\n"
                             "{\"id\": \"b\", \"scores\": [1, 2]}\n");
  EXPECT_THROW(read_logits_file(nan, "m", ids), DataError);
  EXPECT_THROW(read_logits_file(dir.path() / "nope.jsonl", "m", ids), DataError);
}

TEST(LogitsFile, WriteReadRoundTrip) {
  TempDir dir;
  ScoreMatrix m{"m", 3, {}};
  m.rows.emplace("x", (VectorXd(3) << 0.1, -1e-300, 12345.678901234567).finished());
  m.rows.emplace("y", (VectorXd(3) << 1.0 / 3, 2, 3).finished());
  write_logits_file(dir.path() / "m.jsonl", m);
  const std::vector<std::string> ids{"x", "y"};
  const auto back = read_logits_file(dir.path() / "m.jsonl", "m", ids);
  EXPECT_EQ(back.rows, m.rows);
}

TEST(ToyBackend, DeterministicAndSaveLoadExact) {
  TempDir dir;
  const auto data = testing::separable_validation_set(30, 5);
  ToyModel model{init_params<double>(ToyDims{8, 4, 64}, 17), {}};
  model.config.dims = ToyDims{8, 4, 64};
  model.config.seed = 17;
  save_toy_model(dir.path() / "p.json", model);
  const auto loaded = load_toy_model(dir.path() / "p.json");
  EXPECT_TRUE(loaded.params == model.params);
  EXPECT_EQ(loaded.config.seed, 17u);

  const auto backend = ScorerBackend::parse("toy:t:" + (dir.path() / "p.json").string());
  const auto a = load_score_matrix(backend, data);
  const auto b = load_score_matrix(backend, data);
  LoadOptions opts;
  opts.toy_model = &model;
  const auto c = load_score_matrix(backend, data, opts);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.rows, c.rows);
  EXPECT_EQ(a.rows.size(), 30u);
  EXPECT_EQ(a.choice_count, 2);
}

TEST(ToyBackend, RejectsCorruptParams) {
  TempDir dir;
  ToyModel model{init_params<double>(ToyDims{4, 2, 16}, 1), {}};
  model.config.dims = ToyDims{4, 2, 16};
  save_toy_model(dir.path() / "p.json", model);
  auto j = nlohmann::json::parse(TempDir::read(dir.path() / "p.json"));
  j["values"].erase(0);
  dir.write("short.json", j.dump());
  EXPECT_THROW(load_toy_model(dir.path() / "short.json"), DataError);
  dir.write("junk.json", "{\"format\": \"other\"}");
  EXPECT_THROW(load_toy_model(dir.path() / "junk.json"), DataError);
}

TEST(ScoreMatrix, ArityIsChecked) {
  TempDir dir;
  const auto data = testing::separable_validation_set(2, 1);
  std::string text;
  for (const auto& id : ids_of(data)) text += "{\"id\": \"" + id + "\", \"scores\": [1, 2, 3]}\n";
  const auto p = dir.write("three.jsonl", text);
  EXPECT_THROW(load_score_matrix(ScorerBackend::parse("logits:m:" + p.string()), data), DataError);
}

TEST(WorkerProtocol, RequestAndResponseLines) {
  const auto line = encode_request({"q1", {"a b", "c"}});
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j.at("id"), "q1");
  EXPECT_EQ(j.at("texts").size(), 2u);
  EXPECT_EQ(line.find('\n'), std::string::npos);

  const auto ok = parse_response_line(R"({"id": "q1", "scores": [0.5, -2]})");
  ASSERT_TRUE(ok.scores.has_value());
  EXPECT_EQ(ok.scores->size(), 2);
  const auto err = parse_response_line(R"({"id": "q1", "error": "boom"})");
  EXPECT_EQ(err.error.value(), "boom");

  EXPECT_TRUE(is_ready_line(R"({"ready": true})"));
  EXPECT_FALSE(is_ready_line(R"({"ready": false})"));
  EXPECT_FALSE(is_ready_line("ready"));
  EXPECT_THROW(parse_response_line("nope"), ProtocolError);
  EXPECT_THROW(parse_response_line(R"({"scores": [1]})"), ProtocolError);
  EXPECT_THROW(parse_response_line(R"({"id": "q", "scores": ["x"]})"), ProtocolError);
  EXPECT_THROW(parse_response_line(R"({"id": "q"})"), ProtocolError);
}

TEST(WorkerProtocol, ScoresMatchedById) {
  std::vector<WorkerRequest> reqs;
  for (int i = 0; i < 200; ++i) {
    reqs.push_back({"r" + std::to_string(i), {std::string(static_cast<std::size_t>(i % 7), 'x'), "yy"}});
  }
  for (const char* mode : {"ok", "reverse"}) {
    const auto out = score_with_worker(mock(mode), reqs);
    ASSERT_EQ(out.size(), reqs.size()) << mode;
    for (int i = 0; i < 200; ++i) {
      const auto& row = out.at("r" + std::to_string(i));
      EXPECT_EQ(row(0), i % 7);
      EXPECT_EQ(row(1), 2);
    }
  }
  EXPECT_TRUE(score_with_worker(mock("ok"), std::span<const WorkerRequest>{}).empty());
}

TEST(WorkerProtocol, Violations) {
  const std::vector<WorkerRequest> reqs{{"a", {"x", "y"}}, {"b", {"z", "w"}}};
  for (const char* mode : {"bad_arity", "error", "no_ready", "exit_early", "garbage"}) {
    EXPECT_THROW(score_with_worker(mock(mode), reqs), ProtocolError) << mode;
  }
  EXPECT_THROW(score_with_worker("exit 3", reqs), ProtocolError);
}

TEST(WorkerBackend, SendsReconstructedTexts) {
  const auto data = testing::separable_validation_set(10, 2);
  const auto m = load_score_matrix(ScorerBackend::parse("worker:w:" + mock("ok")), data);
  for (const auto& s : data) {
    const auto choices = reconstruct_choices(s, Markers{});
    const auto& row = m.rows.at(sample_id(s));
    for (std::size_t k = 0; k < choices.size(); ++k) {
      EXPECT_EQ(row(static_cast<Index>(k)), static_cast<double>(choices[k].text.size()));
    }
  }
}

}  // namespace
}  // namespace sensekit
