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

#include <cmath>
#include <random>

#include "sensekit/ensemble.hpp"
#include "sensekit/loss.hpp"
#include "sensekit/scorer.hpp"
#include "support/finite_difference.hpp"

namespace sensekit {
namespace {

constexpr double kLn2 = 0.69314718055994530942;
// ln(1 + e^-2)
constexpr double kLoss20 = 0.12692801104297263;

VectorXd vec(std::initializer_list<double> v) {
  VectorXd x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

TEST(Loss, ClosedForms) {
  EXPECT_NEAR(loss_single(vec({0, 0}), 0), kLn2, 1e-12);
  EXPECT_NEAR(loss_single(vec({2, 0}), 0), std::log1p(std::exp(-2.0)), 1e-12);
  EXPECT_NEAR(loss_single(vec({2, 0}), 0), kLoss20, 1e-12);
  const double big = loss_single(vec({1000, 0}), 0);
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_NEAR(big, 0.0, 1e-300);
  EXPECT_NEAR(loss_single(vec({1000, 0}), 1), 1000.0, 1e-9);
  EXPECT_THROW(loss_single(vec({0, 0}), 2), UsageError);
  EXPECT_THROW(loss_single(vec({0, 0}), -1), UsageError);
}

TEST(Loss, Batch) {
  const std::vector<ScoreVector> one{{"a", "", vec({2, 0})}};
  const std::vector<Label> y0{0};
  EXPECT_DOUBLE_EQ(loss_batch(one, y0), loss_single(vec({2, 0}), 0));

  const std::vector<ScoreVector> twice{{"a", "", vec({2, 0})}, {"a", "", vec({2, 0})}};
  const std::vector<Label> y00{0, 0};
  EXPECT_NEAR(loss_batch(twice, y00), loss_batch(one, y0), 1e-15);

  const std::vector<ScoreVector> mixed{{"a", "", vec({0, 0})}, {"b", "", vec({2, 0})}};
  EXPECT_NEAR(loss_batch(mixed, y00), 0.41003759580145896, 1e-12);
  EXPECT_NEAR(loss_batch(mixed, y00), (kLn2 + kLoss20) / 2, 1e-12);

  EXPECT_THROW(loss_batch({}, {}), UsageError);
  EXPECT_THROW(loss_batch(mixed, y0), UsageError);
}

TEST(Loss, NonNegativeShiftInvariantGradientSumsToZero) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  std::uniform_int_distribution<int> n_choices(2, 3);
  for (int t = 0; t < 1000; ++t) {
    const int n = n_choices(rng);
    VectorXd x(n);
    for (int k = 0; k < n; ++k) x(k) = u(rng);
    const Label y = static_cast<Label>(rng() % static_cast<unsigned>(n));
    const double c = u(rng);
    EXPECT_GE(loss_single(x, y), 0.0);
    EXPECT_NEAR(loss_single(VectorXd(x.array() + c), y), loss_single(x, y), 1e-9);
    EXPECT_NEAR(loss_gradient(x, y).sum(), 0.0, 1e-12);
  }
}

TEST(Loss, SaturatedMarginGivesVanishingGradient) {
  const VectorXd g = loss_gradient(vec({60, 0, -5}), 0);
  EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-25);
}

TEST(ToyScorer, InitDeterministicBiasesZero) {
  const ToyDims dims{4, 3, 16};
  const auto a = init_params(dims, 42);
  const auto b = init_params(dims, 42);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == init_params(dims, 43));
  EXPECT_TRUE((a.hidden_bias().array() == 0).all());
  EXPECT_EQ(a.output_bias(), 0.0);
  EXPECT_LE(a.hidden_weight().cwiseAbs().maxCoeff(), 1 / std::sqrt(4.0));
  EXPECT_LE(a.output_weight().cwiseAbs().maxCoeff(), 1 / std::sqrt(3.0));
  EXPECT_THROW(init_params(ToyDims{0, 3, 16}, 1), UsageError);
}

TEST(ToyScorer, InitMeanWithinThreeSigma) {
  // 10,000 embedding weights ~ U[-1, 1]: sd of the mean is (1/sqrt(3))/100.
  const auto p = init_params(ToyDims{1, 1, 10000}, 5);
  const double mean = p.embedding().mean();
  const double sigma = (1.0 / std::sqrt(3.0)) / std::sqrt(10000.0);
  EXPECT_LT(std::abs(mean), 3 * sigma);
}

TEST(ToyScorer, EncodeMeanPool) {
  const auto p = init_params(ToyDims{5, 3, 32}, 1);
  EXPECT_TRUE(encode(p, TokenSequence{}).isZero());
  const TokenSequence one{{"fridge"}};
  const VectorXd row = p.embedding().row(bucket_of("fridge", 32)).transpose();
  EXPECT_TRUE(encode(p, one).isApprox(row));
  EXPECT_TRUE(encode(p, TokenSequence{{"fridge", "fridge"}}).isApprox(row));
}

TEST(ToyScorer, HandSetOneDimensionalScore) {
  ToyScorerParams<double> p(ToyDims{1, 1, 1});
  p.embedding()(0, 0) = 1;
  p.hidden_weight()(0, 0) = 2;
  p.output_weight()(0) = 3;
  // Single token, single bucket: 3 * relu(2 * 1).
  ReconstructedInput in;
  in.text = "x";
  EXPECT_DOUBLE_EQ(score_input(p, in), 6.0);
}

TEST(ToyScorer, ZeroParamsScoreZero) {
  ToyScorerParams<double> p(ToyDims{4, 3, 16});
  EXPECT_EQ(score_input(p, reconstruct_validation_input("anything at all")), 0.0);
}

TEST(ToyScorer, EvalModeIsDeterministicAndShared) {
  const auto p = init_params(ToyDims{8, 6, 64}, 9);
  const Sample same = ValidationSample{"s", {"the cat sat", "the cat sat"}, 0};
  const auto x = forward_sample(p, same);
  EXPECT_EQ(x.scores(0), x.scores(1));
  EXPECT_EQ(forward_sample(p, same).scores, x.scores);

  const Sample ab = ValidationSample{"ab", {"the cat sat", "a dog ran far"}, 0};
  const Sample ba = ValidationSample{"ba", {"a dog ran far", "the cat sat"}, 1};
  const auto xab = forward_sample(p, ab);
  const auto xba = forward_sample(p, ba);
  EXPECT_EQ(xab.scores(0), xba.scores(1));
  EXPECT_EQ(xab.scores(1), xba.scores(0));
  EXPECT_EQ(predict_label(xab), 1 - predict_label(xba));

  const Sample e = ExplanationSample{"e", "f", {"a", "b", "c"}, 0};
  EXPECT_EQ(forward_sample(p, e).size(), 3);
}

TEST(ToyScorer, DropoutMasksScaleSurvivors) {
  Rng rng(1);
  const VectorXd m = dropout_mask<double>(10000, 0.1, rng);
  for (Index i = 0; i < m.size(); ++i) {
    EXPECT_TRUE(m(i) == 0.0 || std::abs(m(i) - 1 / 0.9) < 1e-15);
  }
  const double dropped = static_cast<double>((m.array() == 0).count()) / 10000.0;
  EXPECT_NEAR(dropped, 0.1, 0.015);
}

TEST(Backward, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ToyDims dims{4, 4, 16};
    const auto params = init_params(dims, 100 + seed);
    const auto batch = testing::random_encoded_batch(4, 2 + seed % 2, dims.buckets, seed);
    Rng rng(seed);
    const auto analytic = backward(params, std::span<const EncodedSample>(batch), 0.0, &rng);
    const auto numeric = testing::finite_difference_gradient(params, batch, 0.0, 0);
    EXPECT_LT(testing::max_relative_error(analytic.grads.values(), numeric), 1e-5);
    EXPECT_NEAR(analytic.loss, testing::batch_loss(params, batch, 0.0, 0), 1e-12);
  }
}

TEST(Backward, MatchesFiniteDifferencesWithFixedDropoutMasks) {
  const ToyDims dims{4, 4, 16};
  const auto params = init_params(dims, 7);
  const auto batch = testing::random_encoded_batch(5, 3, dims.buckets, 8);
  Rng rng(99);
  const auto analytic = backward(params, std::span<const EncodedSample>(batch), 0.25, &rng);
  const auto numeric = testing::finite_difference_gradient(params, batch, 0.25, 99);
  EXPECT_LT(testing::max_relative_error(analytic.grads.values(), numeric), 1e-5);
}

TEST(Backward, EmptyBatchThrows) {
  const auto params = init_params(ToyDims{2, 2, 4}, 1);
  EXPECT_THROW(backward(params, std::span<const EncodedSample>{}), UsageError);
}

}  // namespace
}  // namespace sensekit
