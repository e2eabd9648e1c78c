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

// Weight-shared multiple-choice scorer. Every choice of a sample is passed
// through the same encoder (hashed embeddings, mean pooled) and the same
// feed-forward head (one ReLU hidden layer, scalar output). The encoder is a
// small stand-in for a pretrained language model; real models plug in through
// the score backends instead.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "sensekit/dataset.hpp"
#include "sensekit/error.hpp"
#include "sensekit/loss.hpp"
#include "sensekit/types.hpp"

namespace sensekit {

using Rng = std::mt19937_64;

struct ToyDims {
  Index dim = 32;        // feature width d
  Index hidden = 16;     // hidden units h
  Index buckets = 4096;  // hashed vocabulary size

  bool operator==(const ToyDims&) const = default;
};

/// All parameters live in one contiguous vector; the accessors return Eigen
/// maps onto it, so the optimizer can treat the network as a flat vector.
template <typename Scalar = double>
class ToyScorerParams {
 public:
  using Vector = VectorX<Scalar>;
  using EmbeddingMap = Eigen::Map<RowMajorMatrixX<Scalar>>;
  using ConstEmbeddingMap = Eigen::Map<const RowMajorMatrixX<Scalar>>;
  using MatrixMap = Eigen::Map<MatrixX<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const MatrixX<Scalar>>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  ToyScorerParams() = default;

  /// Zero-initialized parameters of the given shape.
  explicit ToyScorerParams(const ToyDims& dims) : dims_(dims) {
    if (dims.dim < 1 || dims.hidden < 1 || dims.buckets < 1) {
      throw UsageError("toy scorer dimensions must all be >= 1");
    }
    values_ = Vector::Zero(parameter_count(dims));
  }

  static Index parameter_count(const ToyDims& d) {
    return d.buckets * d.dim + d.dim * d.hidden + 2 * d.hidden + 1;
  }

  const ToyDims& dims() const { return dims_; }
  Index size() const { return values_.size(); }

  Vector& values() { return values_; }
  const Vector& values() const { return values_; }

  /// buckets x d, one row per hashed token.
  EmbeddingMap embedding() { return {values_.data(), dims_.buckets, dims_.dim}; }
  ConstEmbeddingMap embedding() const { return {values_.data(), dims_.buckets, dims_.dim}; }

  /// d x h
  MatrixMap hidden_weight() { return {values_.data() + w_off(), dims_.dim, dims_.hidden}; }
  ConstMatrixMap hidden_weight() const {
    return {values_.data() + w_off(), dims_.dim, dims_.hidden};
  }

  VectorMap hidden_bias() { return {values_.data() + b_off(), dims_.hidden}; }
  ConstVectorMap hidden_bias() const { return {values_.data() + b_off(), dims_.hidden}; }

  VectorMap output_weight() { return {values_.data() + out_off(), dims_.hidden}; }
  ConstVectorMap output_weight() const { return {values_.data() + out_off(), dims_.hidden}; }

  Scalar& output_bias() { return values_(values_.size() - 1); }
  Scalar output_bias() const { return values_(values_.size() - 1); }

  bool operator==(const ToyScorerParams& other) const {
    return dims_ == other.dims_ && values_.size() == other.values_.size() &&
           values_ == other.values_;
  }

 private:
  Index w_off() const { return dims_.buckets * dims_.dim; }
  Index b_off() const { return w_off() + dims_.dim * dims_.hidden; }
  Index out_off() const { return b_off() + dims_.hidden; }

  ToyDims dims_{};
  Vector values_;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero. An
/// embedding row is selected by a one-hot input, so its fan-in is 1.
template <typename Scalar = double>
ToyScorerParams<Scalar> init_params(const ToyDims& dims, std::uint64_t seed) {
  ToyScorerParams<Scalar> p(dims);
  Rng rng(seed);
  auto fill = [&](auto&& block, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Index i = 0; i < block.size(); ++i) block.data()[i] = static_cast<Scalar>(u(rng));
  };
  fill(p.embedding(), 1.0);
  fill(p.hidden_weight(), static_cast<double>(dims.dim));
  fill(p.output_weight(), static_cast<double>(dims.hidden));
  return p;
}

/// FNV-1a over the token bytes, reduced modulo the bucket count.
inline Index bucket_of(std::string_view token, Index buckets) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return static_cast<Index>(h % static_cast<std::uint64_t>(buckets));
}

inline std::vector<Index> hash_tokens(const TokenSequence& tokens, Index buckets) {
  std::vector<Index> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens.tokens) out.push_back(bucket_of(t, buckets));
  return out;
}

/// Mean of the embedding rows; the zero vector for an empty sequence.
template <typename Scalar>
VectorX<Scalar> encode_buckets(const ToyScorerParams<Scalar>& params,
                               std::span<const Index> buckets) {
  VectorX<Scalar> pooled = VectorX<Scalar>::Zero(params.dims().dim);
  if (buckets.empty()) return pooled;
  const auto emb = params.embedding();
  for (Index b : buckets) pooled += emb.row(b).transpose();
  return pooled / static_cast<Scalar>(buckets.size());
}

template <typename Scalar>
VectorX<Scalar> encode(const ToyScorerParams<Scalar>& params, const TokenSequence& tokens) {
  const auto buckets = hash_tokens(tokens, params.dims().buckets);
  return encode_buckets(params, std::span<const Index>(buckets));
}

/// Everything the backward pass needs from one branch. Masks hold 0 or
/// 1/(1-rate) per unit and are empty when dropout is off.
template <typename Scalar>
struct BranchTrace {
  std::vector<Index> buckets;
  VectorX<Scalar> feature;
  VectorX<Scalar> feature_mask;
  VectorX<Scalar> preact;
  VectorX<Scalar> hidden;
  VectorX<Scalar> hidden_mask;
  Scalar score{};
};

template <typename Scalar>
VectorX<Scalar> dropout_mask(Index n, Scalar rate, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Scalar keep = Scalar(1) / (Scalar(1) - rate);
  VectorX<Scalar> mask(n);
  for (Index i = 0; i < n; ++i) mask(i) = u(rng) < static_cast<double>(rate) ? Scalar(0) : keep;
  return mask;
}

/// Dropout is applied to the pooled features and to the hidden layer when
/// rate > 0 and rng is non-null.
template <typename Scalar>
BranchTrace<Scalar> forward_branch(const ToyScorerParams<Scalar>& params,
                                   std::vector<Index> buckets, Scalar rate = 0,
                                   Rng* rng = nullptr) {
  BranchTrace<Scalar> t;
  t.buckets = std::move(buckets);
  const bool drop = rate > 0 && rng != nullptr;
  t.feature = encode_buckets(params, std::span<const Index>(t.buckets));
  if (drop) {
    t.feature_mask = dropout_mask(params.dims().dim, rate, *rng);
    t.feature = t.feature.cwiseProduct(t.feature_mask);
  }
  t.preact = params.hidden_weight().transpose() * t.feature + params.hidden_bias();
  t.hidden = t.preact.cwiseMax(Scalar(0));
  if (drop) {
    t.hidden_mask = dropout_mask(params.dims().hidden, rate, *rng);
    t.hidden = t.hidden.cwiseProduct(t.hidden_mask);
  }
  t.score = params.output_weight().dot(t.hidden) + params.output_bias();
  return t;
}

/// Accumulates d(score)/d(params) * upstream into grads.
template <typename Scalar>
void backward_branch(const ToyScorerParams<Scalar>& params, const BranchTrace<Scalar>& t,
                     Scalar upstream, ToyScorerParams<Scalar>& grads) {
  grads.output_bias() += upstream;
  grads.output_weight() += upstream * t.hidden;
  VectorX<Scalar> g_pre = upstream * params.output_weight();
  if (t.hidden_mask.size() > 0) g_pre = g_pre.cwiseProduct(t.hidden_mask);
  g_pre = (t.preact.array() > Scalar(0)).select(g_pre, Scalar(0));
  grads.hidden_bias() += g_pre;
  grads.hidden_weight() += t.feature * g_pre.transpose();
  if (t.buckets.empty()) return;
  VectorX<Scalar> g_feat = params.hidden_weight() * g_pre;
  if (t.feature_mask.size() > 0) g_feat = g_feat.cwiseProduct(t.feature_mask);
  g_feat /= static_cast<Scalar>(t.buckets.size());
  auto emb = grads.embedding();
  for (Index b : t.buckets) emb.row(b) += g_feat.transpose();
}

/// Score of one reconstructed input. rate == 0 (or a null rng) is eval mode.
template <typename Scalar>
Scalar score_input(const ToyScorerParams<Scalar>& params, const ReconstructedInput& input,
                   Scalar rate = 0, Rng* rng = nullptr,
                   std::size_t max_len = kDefaultMaxSeqLen) {
  auto buckets = hash_tokens(tokenize(input.text, max_len), params.dims().buckets);
  return forward_branch(params, std::move(buckets), rate, rng).score;
}

/// A sample with each choice already reconstructed, tokenized and hashed.
struct EncodedSample {
  std::string id;
  std::vector<std::vector<Index>> choices;
  Label label = 0;
};

inline EncodedSample encode_sample(const Sample& sample, Index buckets,
                                   std::size_t max_len = kDefaultMaxSeqLen,
                                   const Markers& markers = {}) {
  EncodedSample e;
  e.id = sample_id(sample);
  e.label = gold_label(sample);
  for (const auto& in : reconstruct_choices(sample, markers)) {
    e.choices.push_back(hash_tokens(tokenize(in.text, max_len), buckets));
  }
  return e;
}

inline std::vector<EncodedSample> encode_samples(std::span<const Sample> samples, Index buckets,
                                                 std::size_t max_len = kDefaultMaxSeqLen,
                                                 const Markers& markers = {}) {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(encode_sample(s, buckets, max_len, markers));
  return out;
}

enum class Mode { train, eval };

template <typename Scalar>
VectorX<Scalar> forward_encoded(const ToyScorerParams<Scalar>& params, const EncodedSample& s,
                                Scalar rate = 0, Rng* rng = nullptr) {
  VectorX<Scalar> x(static_cast<Index>(s.choices.size()));
  for (std::size_t k = 0; k < s.choices.size(); ++k) {
    x(static_cast<Index>(k)) = forward_branch(params, s.choices[k], rate, rng).score;
  }
  return x;
}

/// Scores every choice of the sample with the same parameters. In train mode
/// each branch draws its own dropout masks.
inline ScoreVector forward_sample(const ToyScorerParams<double>& params, const Sample& sample,
                                  Mode mode = Mode::eval, Rng* rng = nullptr,
                                  double dropout = 0.1,
                                  std::size_t max_len = kDefaultMaxSeqLen,
                                  const Markers& markers = {}) {
  const auto e = encode_sample(sample, params.dims().buckets, max_len, markers);
  const double rate = mode == Mode::train ? dropout : 0.0;
  return {e.id, {}, forward_encoded(params, e, rate, mode == Mode::train ? rng : nullptr)};
}

template <typename Scalar>
struct GradientResult {
  Scalar loss{};
  ToyScorerParams<Scalar> grads;
};

/// Exact gradient of the mean batch loss. Masks drawn in the forward pass are
/// reused by the backward pass; samples are reduced in batch order.
template <typename Scalar>
GradientResult<Scalar> backward(const ToyScorerParams<Scalar>& params,
                                std::span<const EncodedSample> batch, Scalar rate = 0,
                                Rng* rng = nullptr) {
  if (batch.empty()) throw UsageError("backward: empty batch");
  GradientResult<Scalar> out{Scalar(0), ToyScorerParams<Scalar>(params.dims())};
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(batch.size());
  std::vector<BranchTrace<Scalar>> traces;
  for (const auto& s : batch) {
    traces.clear();
    VectorX<Scalar> x(static_cast<Index>(s.choices.size()));
    for (std::size_t k = 0; k < s.choices.size(); ++k) {
      traces.push_back(forward_branch(params, s.choices[k], rate, rng));
      x(static_cast<Index>(k)) = traces.back().score;
    }
    out.loss += loss_single(x, s.label) * inv_n;
    const VectorX<Scalar> g = loss_gradient(x, s.label) * inv_n;
    for (std::size_t k = 0; k < traces.size(); ++k) {
      backward_branch(params, traces[k], g(static_cast<Index>(k)), out.grads);
    }
  }
  return out;
}

}  // namespace sensekit
