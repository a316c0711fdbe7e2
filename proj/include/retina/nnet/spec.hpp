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
#ifndef RETINA_NNET_SPEC_HPP_
#define RETINA_NNET_SPEC_HPP_

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "retina/error.hpp"

namespace retina::nnet {

inline constexpr std::size_t kNumClasses = 5;

enum class LayerKind { conv2d, batchnorm, maxpool, dropout, flatten, dense, softmax };
enum class Activation { none, relu };

inline std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::dropout: return "dropout";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
    case LayerKind::softmax: return "softmax";
  }
  return "?";
}

/// One layer. Only the fields relevant to `kind` are meaningful.
struct LayerSpec {
  LayerKind kind = LayerKind::flatten;
  int units = 0;  // conv2d output channels / dense units
  int kernel = 3;
  int window = 3;
  int stride = 2;
  Activation activation = Activation::none;
  double rate = 0.25;
  double l2 = 0.0;
  double epsilon = 1e-5;
  double momentum = 0.9;

  static LayerSpec conv2d(int channels, int kernel = 3) {
    LayerSpec l;
    l.kind = LayerKind::conv2d;
    l.units = channels;
    l.kernel = kernel;
    l.activation = Activation::relu;
    return l;
  }
  static LayerSpec batchnorm(double epsilon = 1e-5, double momentum = 0.9) {
    LayerSpec l;
    l.kind = LayerKind::batchnorm;
    l.epsilon = epsilon;
    l.momentum = momentum;
    return l;
  }
  static LayerSpec maxpool(int window = 3, int stride = 2) {
    LayerSpec l;
    l.kind = LayerKind::maxpool;
    l.window = window;
    l.stride = stride;
    return l;
  }
  static LayerSpec dropout(double rate = 0.25) {
    LayerSpec l;
    l.kind = LayerKind::dropout;
    l.rate = rate;
    return l;
  }
  static LayerSpec flatten() { return LayerSpec{}; }
  static LayerSpec dense(int units, Activation act = Activation::none, double l2 = 0.0) {
    LayerSpec l;
    l.kind = LayerKind::dense;
    l.units = units;
    l.activation = act;
    l.l2 = l2;
    return l;
  }
  static LayerSpec softmax() {
    LayerSpec l;
    l.kind = LayerKind::softmax;
    return l;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
  int channels = 3;
  int height = 0;
  int width = 0;
  std::vector<LayerSpec> layers;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Activation shape between layers: C x H x W, or a feature vector of
/// length C once flattened.
struct ActShape {
  std::size_t channels = 0;
  std::size_t height = 1;
  std::size_t width = 1;
  bool flat = false;

  std::size_t features() const { return channels * height * width; }
  friend bool operator==(const ActShape&, const ActShape&) = default;
};

inline std::size_t pooled_size(std::size_t n, int window, int stride) {
  return (n - static_cast<std::size_t>(window)) / static_cast<std::size_t>(stride) + 1;
}

/// Output shape of every layer (index i = after layer i). Validates the chain.
inline std::vector<ActShape> shape_chain(const NetworkSpec& spec) {
  if (spec.channels < 1 || spec.height < 1 || spec.width < 1) {
    fail(ErrorKind::InvalidInputSize, "input dimensions must be positive");
  }
  ActShape cur{static_cast<std::size_t>(spec.channels), static_cast<std::size_t>(spec.height),
               static_cast<std::size_t>(spec.width), false};
  std::vector<ActShape> out;
  out.reserve(spec.layers.size());
  int flattens = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + std::string(to_string(l.kind)) + ")";
    switch (l.kind) {
      case LayerKind::conv2d:
        if (cur.flat) fail(ErrorKind::ShapeMismatch, where + " needs a spatial input");
        if (l.units < 1 || l.kernel < 1 || l.kernel % 2 == 0) {
          fail(ErrorKind::ShapeMismatch, where + " needs positive channels and an odd kernel");
        }
        cur.channels = static_cast<std::size_t>(l.units);
        break;
      case LayerKind::batchnorm:
        if (!(l.epsilon > 0.0) || !(l.momentum >= 0.0 && l.momentum < 1.0)) {
          fail(ErrorKind::ShapeMismatch, where + " has invalid epsilon/momentum");
        }
        break;
      case LayerKind::maxpool:
        if (cur.flat) fail(ErrorKind::ShapeMismatch, where + " needs a spatial input");
        if (l.window < 1 || l.stride < 1) fail(ErrorKind::ShapeMismatch, where + " has invalid window");
        if (cur.height < static_cast<std::size_t>(l.window) || cur.width < static_cast<std::size_t>(l.window)) {
          fail(ErrorKind::InvalidInputSize, where + " would underflow a " + std::to_string(cur.height) + "x" +
                                                std::to_string(cur.width) + " input");
        }
        cur.height = pooled_size(cur.height, l.window, l.stride);
        cur.width = pooled_size(cur.width, l.window, l.stride);
        break;
      case LayerKind::dropout:
        if (!(l.rate >= 0.0 && l.rate < 1.0)) fail(ErrorKind::ShapeMismatch, where + " rate must be in [0, 1)");
        break;
      case LayerKind::flatten:
        if (cur.flat) fail(ErrorKind::ShapeMismatch, where + " input already flat");
        ++flattens;
        cur = ActShape{cur.features(), 1, 1, true};
        break;
      case LayerKind::dense:
        if (!cur.flat) fail(ErrorKind::ShapeMismatch, where + " needs a flattened input");
        if (l.units < 1 || l.l2 < 0.0) fail(ErrorKind::ShapeMismatch, where + " needs positive units");
        cur.channels = static_cast<std::size_t>(l.units);
        break;
      case LayerKind::softmax:
        if (i + 1 != spec.layers.size()) fail(ErrorKind::ShapeMismatch, where + " must be the final layer");
        if (!cur.flat || cur.features() != kNumClasses) {
          fail(ErrorKind::ShapeMismatch, where + " must see " + std::to_string(kNumClasses) + " features");
        }
        break;
    }
    out.push_back(cur);
  }
  if (flattens != 1) fail(ErrorKind::ShapeMismatch, "network needs exactly one flatten layer");
  if (spec.layers.empty() || spec.layers.back().kind != LayerKind::softmax) {
    fail(ErrorKind::ShapeMismatch, "network must end in softmax");
  }
  return out;
}

/// Index of the layer whose output each relu is applied to. A conv2d or
/// dense relu moves past an immediately following batchnorm, giving
/// conv -> batchnorm -> relu.
inline std::vector<bool> relu_sites(const NetworkSpec& spec) {
  std::vector<bool> sites(spec.layers.size(), false);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if ((l.kind != LayerKind::conv2d && l.kind != LayerKind::dense) || l.activation != Activation::relu) continue;
    const bool deferred = i + 1 < spec.layers.size() && spec.layers[i + 1].kind == LayerKind::batchnorm;
    sites[deferred ? i + 1 : i] = true;
  }
  return sites;
}

struct ParamCount {
  std::size_t total = 0;      // including batchnorm running statistics
  std::size_t trainable = 0;
};

inline ParamCount param_count(const NetworkSpec& spec) {
  const auto shapes = shape_chain(spec);
  ParamCount count;
  std::size_t in_channels = static_cast<std::size_t>(spec.channels);
  std::size_t in_features = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::size_t before_channels = i == 0 ? in_channels : shapes[i - 1].channels;
    const std::size_t before_features = i == 0 ? in_features : shapes[i - 1].features();
    switch (l.kind) {
      case LayerKind::conv2d: {
        const std::size_t k = static_cast<std::size_t>(l.kernel);
        const std::size_t n = before_channels * l.units * k * k + l.units;
        count.total += n;
        count.trainable += n;
        break;
      }
      case LayerKind::dense: {
        const std::size_t n = before_features * l.units + l.units;
        count.total += n;
        count.trainable += n;
        break;
      }
      case LayerKind::batchnorm:
        count.total += 4 * before_channels;
        count.trainable += 2 * before_channels;
        break;
      default:
        break;
    }
  }
  return count;
}

namespace detail {
inline std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// Text form stored in checkpoints, one layer per line.
inline std::string describe(const NetworkSpec& spec) {
  std::ostringstream out;
  out << "input " << spec.channels << ' ' << spec.height << ' ' << spec.width << '\n';
  for (const auto& l : spec.layers) {
    out << to_string(l.kind);
    switch (l.kind) {
      case LayerKind::conv2d:
        out << ' ' << l.units << ' ' << l.kernel << ' ' << (l.activation == Activation::relu ? "relu" : "none");
        break;
      case LayerKind::batchnorm: out << ' ' << detail::real(l.epsilon) << ' ' << detail::real(l.momentum); break;
      case LayerKind::maxpool: out << ' ' << l.window << ' ' << l.stride; break;
      case LayerKind::dropout: out << ' ' << detail::real(l.rate); break;
      case LayerKind::dense:
        out << ' ' << l.units << ' ' << (l.activation == Activation::relu ? "relu" : "none") << ' '
            << detail::real(l.l2);
        break;
      case LayerKind::flatten:
      case LayerKind::softmax: break;
    }
    out << '\n';
  }
  return out.str();
}

inline NetworkSpec parse_descriptor(std::string_view text) {
  std::istringstream in{std::string(text)};
  NetworkSpec spec;
  std::string line;
  bool have_input = false;
  const auto bad = [](const std::string& l) { fail(ErrorKind::CorruptCheckpoint, "bad network descriptor line '" + l + "'"); };
  const auto activation = [&](const std::string& s, const std::string& l) {
    if (s == "relu") return Activation::relu;
    if (s != "none") bad(l);
    return Activation::none;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    LayerSpec l;
    std::string act;
    if (kind == "input") {
      fields >> spec.channels >> spec.height >> spec.width;
      have_input = true;
      if (fields.fail()) bad(line);
      continue;
    } else if (kind == "conv2d") {
      fields >> l.units >> l.kernel >> act;
      l = LayerSpec::conv2d(l.units, l.kernel);
      l.activation = activation(act, line);
    } else if (kind == "batchnorm") {
      double eps = 0, mom = 0;
      fields >> eps >> mom;
      l = LayerSpec::batchnorm(eps, mom);
    } else if (kind == "maxpool") {
      int w = 0, s = 0;
      fields >> w >> s;
      l = LayerSpec::maxpool(w, s);
    } else if (kind == "dropout") {
      double rate = 0;
      fields >> rate;
      l = LayerSpec::dropout(rate);
    } else if (kind == "flatten") {
      l = LayerSpec::flatten();
    } else if (kind == "dense") {
      int units = 0;
      double l2 = 0;
      fields >> units >> act >> l2;
      l = LayerSpec::dense(units, activation(act, line), l2);
    } else if (kind == "softmax") {
      l = LayerSpec::softmax();
    } else {
      bad(line);
    }
    if (fields.fail()) bad(line);
    spec.layers.push_back(l);
  }
  if (!have_input) fail(ErrorKind::CorruptCheckpoint, "network descriptor lacks an input line");
  return spec;
}

/// The screening network: nine 3x3 conv layers each followed by batchnorm,
/// six 3/2 max-pools, dropout, a 96-unit L2-regularised dense layer,
/// dropout, batchnorm and a 5-way softmax. Conv widths scale by
/// `width_scale` (rounded up); the dense layer stays at 96 units.
inline NetworkSpec grading_net_spec(int input_size, double width_scale = 1.0, double l2 = 1e-4,
                                    double dropout = 0.25) {
  if (!(width_scale > 0.0)) fail(ErrorKind::InvalidConfig, "width_scale must be positive");
  const auto w = [&](int c) { return static_cast<int>(std::ceil(c * width_scale - 1e-9)); };
  NetworkSpec spec;
  spec.channels = 3;
  spec.height = input_size;
  spec.width = input_size;
  auto& L = spec.layers;
  const auto conv_bn = [&](int c) {
    L.push_back(LayerSpec::conv2d(w(c)));
    L.push_back(LayerSpec::batchnorm());
  };
  conv_bn(16);
  conv_bn(16);
  L.push_back(LayerSpec::maxpool());
  conv_bn(32);
  conv_bn(32);
  L.push_back(LayerSpec::maxpool());
  conv_bn(64);
  conv_bn(64);
  L.push_back(LayerSpec::maxpool());
  conv_bn(96);
  L.push_back(LayerSpec::maxpool());
  conv_bn(96);
  L.push_back(LayerSpec::maxpool());
  conv_bn(128);
  L.push_back(LayerSpec::maxpool());
  L.push_back(LayerSpec::dropout(dropout));
  L.push_back(LayerSpec::flatten());
  L.push_back(LayerSpec::dense(96, Activation::relu, l2));
  L.push_back(LayerSpec::dropout(dropout));
  L.push_back(LayerSpec::batchnorm());
  L.push_back(LayerSpec::dense(static_cast<int>(kNumClasses)));
  L.push_back(LayerSpec::softmax());
  shape_chain(spec);
  return spec;
}

}  // namespace retina::nnet

#endif  // RETINA_NNET_SPEC_HPP_
