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
#ifndef RETINA_TRAIN_ADAM_HPP_
#define RETINA_TRAIN_ADAM_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "retina/error.hpp"
#include "retina/nnet/params.hpp"
#include "retina/nnet/tensor.hpp"

namespace retina::train {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments for every trainable tensor, in ParamStore order.
template <class T>
struct AdamState {
  std::vector<nnet::Tensor<T>> m;
  std::vector<nnet::Tensor<T>> v;
  std::uint64_t step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Bias-corrected Adam update of one tensor at step `t` (t >= 1).
template <class T>
void adam_update(std::span<T> theta, std::span<const T> grad, std::span<T> m, std::span<T> v, std::uint64_t t,
                 const AdamConfig& cfg) {
  if (grad.size() != theta.size() || m.size() != theta.size() || v.size() != theta.size()) {
    fail(ErrorKind::ShapeMismatch, "adam: parameter, gradient and moment sizes differ");
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double m_hat = mi / c1;
    const double v_hat = vi / c2;
    theta[i] = static_cast<T>(theta[i] - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
  }
}

/// One optimizer step over every trainable tensor. Moments are created on
/// the first call.
template <class T>
void adam_step(nnet::ParamStore<T>& params, const nnet::GradientStore<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg) {
  std::vector<nnet::Tensor<T>*> targets;
  params.for_each([&](const std::string&, nnet::Tensor<T>& t, bool trainable) {
    if (trainable) targets.push_back(&t);
  });
  std::vector<const nnet::Tensor<T>*> g;
  grads.for_each([&](const std::string&, const nnet::Tensor<T>& t) { g.push_back(&t); });
  if (g.size() != targets.size()) fail(ErrorKind::ShapeMismatch, "adam: gradient count does not match parameters");
  if (state.m.empty()) {
    for (const auto* t : targets) {
      state.m.emplace_back(t->shape());
      state.v.emplace_back(t->shape());
    }
  }
  if (state.m.size() != targets.size()) fail(ErrorKind::ShapeMismatch, "adam: moment count does not match parameters");
  ++state.step;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (g[i]->shape() != targets[i]->shape() || state.m[i].shape() != targets[i]->shape()) {
      fail(ErrorKind::ShapeMismatch, "adam: shape mismatch at tensor " + std::to_string(i));
    }
    adam_update<T>(targets[i]->values(), g[i]->values(), state.m[i].values(), state.v[i].values(), state.step, cfg);
  }
}

}  // namespace retina::train

#endif  // RETINA_TRAIN_ADAM_HPP_
