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
#ifndef RETINA_NNET_PARAMS_HPP_
#define RETINA_NNET_PARAMS_HPP_

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "retina/nnet/spec.hpp"
#include "retina/nnet/tensor.hpp"
#include "retina/rng.hpp"

namespace retina::nnet {

/// Parameters owned by one layer; tensors a layer kind does not use stay empty.
template <class T>
struct LayerParams {
  Tensor<T> weight;  // conv2d: [out, in, k, k]; dense: [out, in]
  Tensor<T> bias;
  Tensor<T> gamma;   // batchnorm
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

inline std::string param_name(std::size_t layer, const char* role) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "layer%02zu.%s", layer, role);
  return buf;
}

template <class T>
struct ParamStore {
  std::vector<LayerParams<T>> layers;

  /// Visits every non-empty tensor in a fixed order: f(name, tensor, trainable).
  template <class F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    out.layers.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& s = layers[i];
      auto& d = out.layers[i];
      d.weight = s.weight.template cast<U>();
      d.bias = s.bias.template cast<U>();
      d.gamma = s.gamma.template cast<U>();
      d.beta = s.beta.template cast<U>();
      d.running_mean = s.running_mean.template cast<U>();
      d.running_var = s.running_var.template cast<U>();
    }
    return out;
  }

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    for (std::size_t i = 0; i < self.layers.size(); ++i) {
      auto& l = self.layers[i];
      if (!l.weight.empty()) f(param_name(i, "weight"), l.weight, true);
      if (!l.bias.empty()) f(param_name(i, "bias"), l.bias, true);
      if (!l.gamma.empty()) f(param_name(i, "gamma"), l.gamma, true);
      if (!l.beta.empty()) f(param_name(i, "beta"), l.beta, true);
      if (!l.running_mean.empty()) f(param_name(i, "running_mean"), l.running_mean, false);
      if (!l.running_var.empty()) f(param_name(i, "running_var"), l.running_var, false);
    }
  }
};

/// Gradients of the loss for every trainable tensor, plus the input.
template <class T>
struct GradientStore {
  struct Layer {
    Tensor<T> weight, bias, gamma, beta;
  };
  std::vector<Layer> layers;
  Tensor<T> input;

  /// Same order as ParamStore::for_each restricted to trainable tensors.
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (!l.weight.empty()) f(param_name(i, "weight"), l.weight);
      if (!l.bias.empty()) f(param_name(i, "bias"), l.bias);
      if (!l.gamma.empty()) f(param_name(i, "gamma"), l.gamma);
      if (!l.beta.empty()) f(param_name(i, "beta"), l.beta);
    }
  }
};

/// Glorot-uniform weights, zero biases, batchnorm gain 1 / shift 0 /
/// running mean 0 / running variance 1.
template <class T>
ParamStore<T> init_params(const NetworkSpec& spec, Rng& rng) {
  const auto shapes = shape_chain(spec);
  ParamStore<T> params;
  params.layers.resize(spec.layers.size());
  const auto glorot = [&](Tensor<T>& w, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : w.values()) v = static_cast<T>(rng.uniform(-limit, limit));
  };
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const ActShape in = i == 0 ? ActShape{static_cast<std::size_t>(spec.channels), static_cast<std::size_t>(spec.height),
                                          static_cast<std::size_t>(spec.width), false}
                               : shapes[i - 1];
    auto& p = params.layers[i];
    switch (l.kind) {
      case LayerKind::conv2d: {
        const std::size_t k = static_cast<std::size_t>(l.kernel);
        const std::size_t out = static_cast<std::size_t>(l.units);
        p.weight = Tensor<T>({out, in.channels, k, k});
        glorot(p.weight, static_cast<double>(in.channels * k * k), static_cast<double>(out * k * k));
        p.bias = Tensor<T>({out});
        break;
      }
      case LayerKind::dense: {
        const std::size_t out = static_cast<std::size_t>(l.units);
        p.weight = Tensor<T>({out, in.features()});
        glorot(p.weight, static_cast<double>(in.features()), static_cast<double>(out));
        p.bias = Tensor<T>({out});
        break;
      }
      case LayerKind::batchnorm:
        p.gamma = Tensor<T>({in.channels}, T(1));
        p.beta = Tensor<T>({in.channels});
        p.running_mean = Tensor<T>({in.channels});
        p.running_var = Tensor<T>({in.channels}, T(1));
        break;
      default:
        break;
    }
  }
  return params;
}

template <class T>
std::size_t stored_values(const ParamStore<T>& params) {
  std::size_t n = 0;
  params.for_each([&](const std::string&, const Tensor<T>& t, bool) { n += t.size(); });
  return n;
}

}  // namespace retina::nnet

#endif  // RETINA_NNET_PARAMS_HPP_
