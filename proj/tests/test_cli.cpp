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

#include <random>
#include <sstream>

#include "sensekit/analysis.hpp"
#include "sensekit/backend.hpp"
#include "sensekit/cli.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

namespace sensekit {
namespace {

using nlohmann::json;
using testing::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::filesystem::path& p) { return json::parse(TempDir::read(p)); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    samples_ = testing::separable_validation_set(60, 11);
    data_ = dir_.write("dev.csv", testing::validation_csv(samples_)).string();
    format_ = dir_.write("format.json", testing::kValidationCsvFormat).string();
  }

  // Logits that get the gold label right with probability `skill`.
  std::string noisy_logits(const std::string& name, double skill, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution right(skill);
    std::normal_distribution<double> z(0, 0.1);
    ScoreMatrix m{name, 2, {}};
    for (const auto& s : samples_) {
      const Label y = gold_label(s);
      const Label pick = right(rng) ? y : 1 - y;
      VectorXd row(2);
      row << z(rng), z(rng);
      row(pick) += 1.0;
      m.rows.emplace(sample_id(s), row);
    }
    const auto p = dir_.path() / (name + ".jsonl");
    write_logits_file(p, m);
    return "logits:" + name + ":" + p.string();
  }

  std::vector<std::string> data_args() { return {"--data", data_, "--format", format_}; }

  TempDir dir_;
  std::vector<Sample> samples_;
  std::string data_, format_;
};

TEST_F(CliTest, Stats) {
  auto args = std::vector<std::string>{"stats", "--data", "dev=" + data_, "--format", format_,
                                       "--out-dir", dir_.path().string()};
  const auto r = invoke(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = read_json(dir_.path() / "stats.json");
  EXPECT_EQ(j["splits"][0]["split"], "dev");
  EXPECT_EQ(j["splits"][0]["sample_count"], 60);
  EXPECT_EQ(j["config"]["command"], "stats");
  EXPECT_NE(r.out.find("samples"), std::string::npos);
}

TEST_F(CliTest, TrainThenScore) {
  const auto out = (dir_.path() / "toy").string();
  auto train = std::vector<std::string>{"train-toy", "--train", data_, "--dev", data_,
                                        "--format", format_, "--epochs", "3", "--lr", "1e-2",
                                        "--dim", "8", "--hidden", "4", "--buckets", "128",
                                        "--seed", "5", "--out-dir", out};
  auto r = invoke(train);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto trace = read_json(dir_.path() / "toy" / "trace.json");
  EXPECT_EQ(trace["config"]["seed"], 5);
  const auto params = dir_.path() / "toy" / "params.json";
  ASSERT_TRUE(std::filesystem::exists(params));

  auto score = data_args();
  score.insert(score.begin(), "score");
  score.insert(score.end(), {"--backend", "toy:t:" + params.string(), "--out-dir", out});
  r = invoke(score);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto logits = dir_.path() / "toy" / "t.logits.jsonl";
  ASSERT_TRUE(std::filesystem::exists(logits));
  EXPECT_TRUE(std::filesystem::exists(logits.string() + ".meta.json"));

  std::vector<std::string> ids;
  for (const auto& s : samples_) ids.push_back(sample_id(s));
  const auto from_file = read_logits_file(logits, "t", ids);
  const auto direct = load_score_matrix(ScorerBackend::parse("toy:t:" + params.string()), samples_);
  EXPECT_EQ(from_file.rows, direct.rows);

  // Same seed, same model.
  auto again = train;
  again.back() = (dir_.path() / "toy2").string();
  ASSERT_EQ(invoke(again).code, 0);
  EXPECT_EQ(load_toy_model(params).params.values(),
            load_toy_model(dir_.path() / "toy2" / "params.json").params.values());
}

TEST_F(CliTest, FitEvaluateOverlap) {
  const std::vector<std::string> backends{noisy_logits("m1", 0.7, 1), noisy_logits("m2", 0.7, 2),
                                          noisy_logits("m3", 0.7, 3)};
  const auto out = dir_.path().string();
  std::vector<std::string> fit{"fit-weights", "--dev", data_, "--format", format_, "--out-dir", out,
                               "--seed", "3"};
  for (const auto& b : backends) fit.insert(fit.end(), {"--backend", b});
  auto r = invoke(fit);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto wj = read_json(dir_.path() / "weights.json");
  const auto weights = weights_from_json(wj);
  EXPECT_EQ(weights.backend_ids, (std::vector<std::string>{"m1", "m2", "m3"}));
  EXPECT_EQ(wj["config"]["seed"], 3);
  EXPECT_TRUE(std::filesystem::exists(dir_.path() / "de_trace.json"));
  const double best_single =
      *std::max_element(weights.single_dev_accuracies.begin(), weights.single_dev_accuracies.end());
  EXPECT_GE(weights.dev_accuracy, best_single);

  std::vector<std::string> eval{"evaluate", "--data", data_, "--format", format_, "--out-dir", out,
                                "--weights", (dir_.path() / "weights.json").string()};
  for (const auto& b : backends) eval.insert(eval.end(), {"--backend", b});
  r = invoke(eval);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = parse_report(TempDir::read(dir_.path() / "report.json"));
  ASSERT_EQ(report.accuracies.size(), 5u);
  EXPECT_EQ(report.accuracies[3].system, "ensemble");
  EXPECT_DOUBLE_EQ(report.accuracies[3].accuracy, weights.dev_accuracy);
  EXPECT_EQ(report.accuracies[4].system, "majority_vote");
  EXPECT_TRUE(std::filesystem::exists(dir_.path() / "report.txt"));

  eval[0] = "overlap";
  r = invoke(eval);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto venn = venn_from_json(read_json(dir_.path() / "venn.json")["venn"]);
  EXPECT_EQ(venn.total(), samples_.size());
  EXPECT_EQ(venn.systems, (std::vector<std::string>{"m1", "m2", "m3"}));
  EXPECT_NE(r.out.find("m1+m2+m3"), std::string::npos) << r.out;
}

TEST_F(CliTest, UnitWeightsReproduceTheFirstBackend) {
  const std::vector<std::string> backends{noisy_logits("m1", 0.6, 4), noisy_logits("m2", 0.9, 5),
                                          noisy_logits("m3", 0.5, 6)};
  const auto wpath = dir_.write("w.json", R"({"weights": [1, 0, 0], "backends": ["m1", "m2", "m3"],
                                              "dev_accuracy": 0, "seed": 0})");
  std::vector<std::string> eval{"evaluate", "--data", data_, "--format", format_,
                                "--out-dir", dir_.path().string(), "--weights", wpath.string()};
  for (const auto& b : backends) eval.insert(eval.end(), {"--backend", b});
  const auto r = invoke(eval);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = parse_report(TempDir::read(dir_.path() / "report.json"));
  EXPECT_EQ(report.accuracies[0].accuracy, report.accuracies[3].accuracy);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"stats"}).code, 2);
  EXPECT_EQ(invoke({"stats", "--data", data_, "--format", format_, "--bogus"}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);

  const auto bad_format = dir_.write("bad.json", R"({"answer_column": "nope"})");
  const auto r = invoke({"stats", "--data", data_, "--format", bad_format.string(),
                         "--out-dir", dir_.path().string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("nope"), std::string::npos) << r.err;

  auto score = data_args();
  score.insert(score.begin(), "score");
  score.insert(score.end(), {"--backend", std::string("worker:w:'") + SENSEKIT_MOCK_WORKER +
                                              "' no_ready",
                             "--out-dir", dir_.path().string()});
  EXPECT_EQ(invoke(score).code, 4);

  const auto zero = dir_.write("zero.json", R"({"weights": [0, 0], "backends": ["m1", "m2"],
                                                "dev_accuracy": 0, "seed": 0})");
  std::vector<std::string> eval{"evaluate", "--data", data_, "--format", format_,
                                "--weights", zero.string(), "--out-dir", dir_.path().string(),
                                "--backend", noisy_logits("m1", 0.5, 1),
                                "--backend", noisy_logits("m2", 0.5, 2)};
  EXPECT_EQ(invoke(eval).code, 5);
}

}  // namespace
}  // namespace sensekit
