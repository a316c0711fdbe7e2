/**
 * Copyright 2026 The Retina Screening Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <cmath>

#include <gtest/gtest.h>

#include "retina/nnet.hpp"

namespace retina::nnet {
namespace {

Tensor<float> random_batch(std::size_t b, std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t({b, c, h, w});
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform());
  return t;
}

// conv, pool, dropout 0, flatten, dense, softmax; no batchnorm.
NetworkSpec small_spec(double rate) {
  NetworkSpec s{3, 9, 9, {}};
  s.layers = {LayerSpec::conv2d(4), LayerSpec::maxpool(), LayerSpec::dropout(rate), LayerSpec::flatten(),
              LayerSpec::dense(6, Activation::relu), LayerSpec::dense(5), LayerSpec::softmax()};
  return s;
}

TEST(GradingNet, ShapeChainAt512) {
  const auto chain = shape_chain(grading_net_spec(512));
  std::vector<std::size_t> pools;
  const auto& spec = grading_net_spec(512);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind == LayerKind::maxpool) pools.push_back(chain[i].height);
  }
  EXPECT_EQ(pools, (std::vector<std::size_t>{255, 127, 63, 31, 15, 7}));
  EXPECT_EQ(chain[0], (ActShape{16, 512, 512, false}));
  EXPECT_EQ(chain[1], (ActShape{16, 512, 512, false}));
  std::vector<std::size_t> conv_channels;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind == LayerKind::conv2d) conv_channels.push_back(chain[i].channels);
    if (spec.layers[i].kind == LayerKind::flatten) {
      EXPECT_EQ(chain[i].features(), 6272u);
    }
  }
  EXPECT_EQ(conv_channels, (std::vector<std::size_t>{16, 16, 32, 32, 64, 64, 96, 96, 128}));
  EXPECT_EQ(chain.back().features(), 5u);
  EXPECT_EQ(spec.layers.size(), 31u);
}

TEST(GradingNet, LayerSequence) {
  using K = LayerKind;
  const std::vector<K> expect{K::conv2d, K::batchnorm, K::conv2d,  K::batchnorm, K::maxpool,   K::conv2d, K::batchnorm,
                              K::conv2d, K::batchnorm, K::maxpool, K::conv2d,    K::batchnorm, K::conv2d, K::batchnorm,
                              K::maxpool, K::conv2d,   K::batchnorm, K::maxpool, K::conv2d,    K::batchnorm,
                              K::maxpool, K::conv2d,   K::batchnorm, K::maxpool, K::dropout,   K::flatten, K::dense,
                              K::dropout, K::batchnorm, K::dense,    K::softmax};
  const auto spec = grading_net_spec(512);
  ASSERT_EQ(spec.layers.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(spec.layers[i].kind, expect[i]) << i;
  EXPECT_EQ(spec.layers[26].units, 96);
  EXPECT_EQ(spec.layers[26].activation, Activation::relu);
  EXPECT_DOUBLE_EQ(spec.layers[26].l2, 1e-4);
  EXPECT_DOUBLE_EQ(spec.layers[29].l2, 0.0);
  EXPECT_DOUBLE_EQ(spec.layers[24].rate, 0.25);
  EXPECT_DOUBLE_EQ(spec.layers[27].rate, 0.25);
}

TEST(GradingNet, PoolChainAt128) {
  const auto spec = grading_net_spec(128);
  const auto chain = shape_chain(spec);
  std::vector<std::size_t> pools;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind == LayerKind::maxpool) pools.push_back(chain[i].height);
  }
  EXPECT_EQ(pools, (std::vector<std::size_t>{63, 31, 15, 7, 3, 1}));
}

TEST(GradingNet, RejectsUnderflow) {
  for (const int n : {64, 32, 10}) {
    try {
      grading_net_spec(n);
      FAIL() << n;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidInputSize);
    }
  }
}

TEST(ParamCount, MatchesClosedForm) {
  // Frozen from tests/oracles/param_count.py.
  const auto c512 = param_count(grading_net_spec(512));
  EXPECT_EQ(c512.total, 926485u);
  EXPECT_EQ(c512.trainable, 925205u);
  EXPECT_LT(std::abs(static_cast<double>(c512.total) - 927911.0) / 927911.0, 0.01);
  EXPECT_EQ(param_count(grading_net_spec(128)).total, 336661u);
  EXPECT_EQ(param_count(grading_net_spec(128, 0.5)).total, 88749u);
}

TEST(ParamCount, MatchesAllocatedStorage) {
  Rng rng(1);
  const auto spec = grading_net_spec(128, 0.5);
  EXPECT_EQ(stored_values(init_params<float>(spec, rng)), param_count(spec).total);
}

TEST(ParamCount, EmptyNetworkIsZero) {
  const NetworkSpec spec{5, 1, 1, {LayerSpec::flatten(), LayerSpec::softmax()}};
  EXPECT_EQ(param_count(spec).total, 0u);
  EXPECT_EQ(param_count(spec).trainable, 0u);
}

TEST(Spec, ValidationErrors) {
  NetworkSpec no_flatten{3, 8, 8, {LayerSpec::dense(5), LayerSpec::softmax()}};
  EXPECT_THROW(shape_chain(no_flatten), Error);
  NetworkSpec bad_tail{3, 8, 8, {LayerSpec::flatten(), LayerSpec::dense(4), LayerSpec::softmax()}};
  EXPECT_THROW(shape_chain(bad_tail), Error);
}

TEST(Spec, DescriptorRoundTrip) {
  for (const auto& spec : {grading_net_spec(512), grading_net_spec(128, 0.5, 3e-3, 0.1), small_spec(0.0)}) {
    EXPECT_EQ(parse_descriptor(describe(spec)), spec);
  }
}

TEST(Spec, WidthScaleRoundsUp) {
  const auto spec = grading_net_spec(128, 0.3);
  EXPECT_EQ(spec.layers[0].units, 5);    // ceil(4.8)
  EXPECT_EQ(spec.layers[21].units, 39);  // ceil(38.4)
  EXPECT_EQ(spec.layers[26].units, 96);
}

TEST(Init, GlorotRangesAndDefaults) {
  Rng rng(3);
  const auto spec = grading_net_spec(128);
  const auto p = init_params<float>(spec, rng);
  const double limit0 = std::sqrt(6.0 / (3 * 9 + 16 * 9));
  for (const float w : p.layers[0].weight.values()) EXPECT_LE(std::abs(w), limit0);
  for (const float b : p.layers[0].bias.values()) EXPECT_EQ(b, 0.0f);
  for (const float g : p.layers[1].gamma.values()) EXPECT_EQ(g, 1.0f);
  for (const float v : p.layers[1].running_var.values()) EXPECT_EQ(v, 1.0f);
  for (const float m : p.layers[1].running_mean.values()) EXPECT_EQ(m, 0.0f);
}

TEST(Forward, SoftmaxRowsSumToOne) {
  auto net = build_grading_network(128, 0.25, 4);
  const auto probs = infer(net.spec, net.params, random_batch(3, 3, 128, 128, 5));
  ASSERT_EQ(probs.shape(), (Shape{3, 5}));
  for (std::size_t b = 0; b < 3; ++b) {
    double s = 0;
    for (std::size_t k = 0; k < 5; ++k) {
      EXPECT_GE(probs[b * 5 + k], 0.0f);
      EXPECT_TRUE(std::isfinite(probs[b * 5 + k]));
      s += probs[b * 5 + k];
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Forward, InputShapeChecked) {
  auto net = build_grading_network(128, 0.25, 4);
  try {
    infer(net.spec, net.params, random_batch(1, 3, 64, 64, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(Forward, ZeroDropoutTrainEqualsInfer) {
  const auto spec = small_spec(0.0);
  Rng init(2), rng(3);
  auto params = init_params<float>(spec, init);
  const auto batch = random_batch(4, 3, 9, 9, 6);
  const auto trained = forward(spec, params, batch, Mode::train, rng);
  EXPECT_EQ(trained.probabilities(), infer(spec, params, batch));
}

TEST(Forward, DeltaKernelIsIdentity) {
  LayerParams<float> p;
  p.weight = Tensor<float>({1, 1, 3, 3});
  p.weight[4] = 1.0f;
  p.bias = Tensor<float>({1});
  const auto x = random_batch(1, 1, 5, 7, 9);
  EXPECT_EQ(detail::conv_forward(x, p, 3), x);
}

TEST(Forward, ConvMatchesDirectSum) {
  Rng rng(10);
  LayerParams<double> p;
  p.weight = Tensor<double>({2, 3, 3, 3});
  p.bias = Tensor<double>({2});
  for (auto& v : p.weight.values()) v = rng.uniform(-1, 1);
  p.bias[0] = 0.3;
  p.bias[1] = -0.2;
  const auto x = random_batch(2, 3, 4, 5, 11).cast<double>();
  const auto y = detail::conv_forward(x, p, 3);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t o = 0; o < 2; ++o) {
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 5; ++c) {
          double s = p.bias[o];
          for (std::size_t i = 0; i < 3; ++i) {
            for (int dy = -1; dy <= 1; ++dy) {
              for (int dx = -1; dx <= 1; ++dx) {
                if (r + dy < 0 || r + dy >= 4 || c + dx < 0 || c + dx >= 5) continue;
                s += p.weight[((o * 3 + i) * 3 + (dy + 1)) * 3 + (dx + 1)] * x[((b * 3 + i) * 4 + (r + dy)) * 5 + (c + dx)];
              }
            }
          }
          EXPECT_NEAR(y[((b * 2 + o) * 4 + r) * 5 + c], s, 1e-12);
        }
      }
    }
  }
}

TEST(Forward, MaxpoolPicksWindowMaxima) {
  Tensor<float> x({1, 1, 5, 5});
  for (std::size_t i = 0; i < 25; ++i) x[i] = static_cast<float>((i * 7) % 11);
  LayerCache<float> cache;
  detail::maxpool_forward(x, LayerSpec::maxpool(), cache);
  ASSERT_EQ(cache.output.shape(), (Shape{1, 1, 2, 2}));
  for (std::size_t oy = 0; oy < 2; ++oy) {
    for (std::size_t ox = 0; ox < 2; ++ox) {
      float m = -1;
      for (std::size_t dy = 0; dy < 3; ++dy) {
        for (std::size_t dx = 0; dx < 3; ++dx) m = std::max(m, x[(oy * 2 + dy) * 5 + ox * 2 + dx]);
      }
      EXPECT_EQ(cache.output[oy * 2 + ox], m);
      EXPECT_EQ(x[cache.argmax[oy * 2 + ox]], m);
    }
  }
}

TEST(Forward, BatchnormTrainStatistics) {
  Rng rng(12);
  Tensor<float> x({8, 3, 4, 4});
  for (auto& v : x.values()) v = static_cast<float>(rng.normal() * 3.0 + 5.0);
  LayerParams<float> p;
  p.gamma = Tensor<float>({3}, 1.0f);
  p.beta = Tensor<float>({3});
  p.running_mean = Tensor<float>({3});
  p.running_var = Tensor<float>({3}, 1.0f);
  LayerCache<float> cache;
  detail::batchnorm_forward(x, p, LayerSpec::batchnorm(), Mode::train, cache);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0, sq = 0;
    for (std::size_t b = 0; b < 8; ++b) {
      for (std::size_t i = 0; i < 16; ++i) s += cache.output[(b * 3 + c) * 16 + i];
    }
    const double mean = s / 128;
    for (std::size_t b = 0; b < 8; ++b) {
      for (std::size_t i = 0; i < 16; ++i) sq += std::pow(cache.output[(b * 3 + c) * 16 + i] - mean, 2);
    }
    EXPECT_NEAR(mean, 0.0, 1e-4);
    EXPECT_NEAR(sq / 128, 1.0, 1e-3);
  }
}

TEST(Forward, RunningStatsUpdateOnlyInTrainMode) {
  NetworkSpec spec{1, 2, 2, {LayerSpec::batchnorm(), LayerSpec::flatten(), LayerSpec::dense(5), LayerSpec::softmax()}};
  Rng init(1), rng(2);
  auto params = init_params<float>(spec, init);
  Tensor<float> x({2, 1, 2, 2});
  for (std::size_t i = 0; i < 8; ++i) x[i] = static_cast<float>(i);  // mean 3.5, variance 5.25
  infer(spec, params, x);
  EXPECT_EQ(params.layers[0].running_mean[0], 0.0f);
  forward(spec, params, x, Mode::train, rng);
  EXPECT_NEAR(params.layers[0].running_mean[0], 0.35, 1e-6);
  EXPECT_NEAR(params.layers[0].running_var[0], 0.9 + 0.525, 1e-6);
}

TEST(Forward, DropoutPreservesExpectation) {
  NetworkSpec spec{1, 2, 2, {LayerSpec::dropout(0.25), LayerSpec::flatten(), LayerSpec::dense(5), LayerSpec::softmax()}};
  Rng init(1), rng(2);
  auto params = init_params<float>(spec, init);
  Tensor<float> x({1, 1, 2, 2});
  x[0] = 0.2f;
  x[1] = 0.4f;
  x[2] = 0.6f;
  x[3] = 0.8f;
  std::array<double, 4> sum{};
  const int draws = 10000;
  int zeros = 0;
  for (int t = 0; t < draws; ++t) {
    const auto trace = forward(spec, params, x, Mode::train, rng);
    for (std::size_t i = 0; i < 4; ++i) {
      sum[i] += trace.layers[0].output[i];
      zeros += trace.layers[0].output[i] == 0.0f;
    }
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(sum[i] / draws, x[i], 0.02 * x[i]);
  EXPECT_NEAR(zeros / (4.0 * draws), 0.25, 0.01);
}

TEST(Backward, LogitGradientIsProbabilityMinusLabel) {
  const auto spec = small_spec(0.0);
  Rng init(2), rng(3);
  auto params = init_params<double>(spec, init);
  const auto batch = random_batch(3, 3, 9, 9, 6).cast<double>();
  Tensor<double> labels({3, 5});
  labels[1] = labels[5 + 4] = labels[10 + 0] = 1.0;
  const auto trace = forward(spec, params, batch, Mode::train, rng);
  const auto grads = backward(spec, params, trace, labels);
  // dense(5) has no activation, so its bias gradient is the column sum of (p - y) / B.
  for (std::size_t k = 0; k < 5; ++k) {
    double expect = 0;
    for (std::size_t b = 0; b < 3; ++b) expect += (trace.probabilities()[b * 5 + k] - labels[b * 5 + k]) / 3.0;
    EXPECT_NEAR(grads.layers[5].bias[k], expect, 1e-14);
  }
}

TEST(Backward, UniformLabelsWithUniformOutputGiveZeroGradient) {
  NetworkSpec spec{5, 1, 1, {LayerSpec::flatten(), LayerSpec::softmax()}};
  ParamStore<double> params;
  params.layers.resize(2);
  Tensor<double> x({2, 5, 1, 1}, 0.7);
  Tensor<double> labels({2, 5}, 0.2);
  Rng rng(1);
  const auto trace = forward(spec, params, x, Mode::train, rng);
  const auto grads = backward(spec, params, trace, labels);
  for (const double g : grads.input.values()) EXPECT_NEAR(g, 0.0, 1e-16);
}

TEST(Backward, NeedsTrainTrace) {
  const auto spec = small_spec(0.0);
  Rng init(2), rng(3);
  auto params = init_params<float>(spec, init);
  const auto batch = random_batch(2, 3, 9, 9, 6);
  const auto trace = forward(spec, params, batch, Mode::infer, rng);
  try {
    backward(spec, params, trace, Tensor<float>({2, 5}, 0.2f));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TraceMismatch);
  }
  const auto train = forward(spec, params, batch, Mode::train, rng);
  EXPECT_THROW(backward(spec, params, train, Tensor<float>({3, 5}, 0.2f)), Error);
}

TEST(Predict, ArgmaxTieBreak) {
  EXPECT_EQ(predicted_grade({0.2, 0.2, 0.2, 0.2, 0.2}).value(), 0);
  EXPECT_EQ(predicted_grade({0.1, 0.1, 0.6, 0.1, 0.1}).value(), 2);
  EXPECT_EQ(predicted_grade({0.1, 0.4, 0.0, 0.4, 0.1}).value(), 1);
}

TEST(Predict, IdenticalImagesIdenticalOutputs) {
  auto net = build_grading_network(128, 0.25, 7);
  Rng rng(1);
  Image img(128, 128);
  for (auto& v : img.pixels()) v = static_cast<float>(rng.uniform());
  const auto preds = predict_proba(net.spec, net.params, std::vector<Image>{img, img, img}, 2);
  ASSERT_EQ(preds.size(), 3u);
  EXPECT_EQ(preds[0].probabilities, preds[1].probabilities);
  EXPECT_EQ(preds[0].probabilities, preds[2].probabilities);
}

TEST(Determinism, SameSeedSameOutputsAndGradients) {
  const auto run = [] {
    auto net = build_grading_network(128, 0.25, 21);
    Rng rng(22);
    const auto batch = random_batch(4, 3, 128, 128, 23);
    Tensor<float> labels({4, 5});
    for (std::size_t b = 0; b < 4; ++b) labels[b * 5 + b] = 1.0f;
    const auto trace = forward(net.spec, net.params, batch, Mode::train, rng);
    const auto grads = backward(net.spec, net.params, trace, labels);
    std::vector<float> flat(trace.probabilities().values().begin(), trace.probabilities().values().end());
    grads.for_each([&](const std::string&, const Tensor<float>& t) { flat.insert(flat.end(), t.values().begin(), t.values().end()); });
    return flat;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace retina::nnet
