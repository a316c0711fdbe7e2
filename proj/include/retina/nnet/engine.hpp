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
#ifndef RETINA_NNET_ENGINE_HPP_
#define RETINA_NNET_ENGINE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "retina/nnet/params.hpp"
#include "retina/nnet/spec.hpp"
#include "retina/nnet/tensor.hpp"
#include "retina/rng.hpp"

namespace retina::nnet {

enum class Mode { train, infer };

template <class T>
struct LayerCache {
  Tensor<T> output;
  std::vector<std::uint32_t> argmax;  // maxpool: flat input index per output element
  Tensor<T> mask;                     // dropout: 0 or 1/(1-rate)
  std::vector<double> mean;           // batchnorm statistics used for normalisation
  std::vector<double> inv_std;
  std::vector<double> variance;
};

template <class T>
struct ForwardTrace {
  Mode mode = Mode::infer;
  Tensor<T> input;
  std::vector<LayerCache<T>> layers;

  const Tensor<T>& probabilities() const { return layers.back().output; }
  const Tensor<T>& layer_input(std::size_t i) const { return i == 0 ? input : layers[i - 1].output; }
  const Tensor<T>& logits() const { return layer_input(layers.size() - 1); }
};

namespace detail {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using ColVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// One sample [C, H, W] -> columns [(C*k*k), (H*W)] with zero "same" padding.
template <class T>
void im2col(const T* x, std::size_t channels, std::size_t h, std::size_t w, int k, RowMat<T>& col) {
  const int pad = k / 2;
  const std::size_t hw = h * w;
  col.resize(static_cast<Eigen::Index>(channels * k * k), static_cast<Eigen::Index>(hw));
  for (std::size_t c = 0; c < channels; ++c) {
    const T* plane = x + c * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = col.data() + ((c * k + ky) * k + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const long iy = static_cast<long>(y) + ky - pad;
          T* dst = row + y * w;
          if (iy < 0 || iy >= static_cast<long>(h)) {
            std::fill(dst, dst + w, T(0));
            continue;
          }
          const T* src = plane + iy * w;
          for (std::size_t xo = 0; xo < w; ++xo) {
            const long ix = static_cast<long>(xo) + kx - pad;
            dst[xo] = (ix < 0 || ix >= static_cast<long>(w)) ? T(0) : src[ix];
          }
        }
      }
    }
  }
}

template <class T>
void col2im(const RowMat<T>& col, std::size_t channels, std::size_t h, std::size_t w, int k, T* dx) {
  const int pad = k / 2;
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    T* plane = dx + c * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = col.data() + ((c * k + ky) * k + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const long iy = static_cast<long>(y) + ky - pad;
          if (iy < 0 || iy >= static_cast<long>(h)) continue;
          const T* src = row + y * w;
          T* dst = plane + iy * w;
          for (std::size_t xo = 0; xo < w; ++xo) {
            const long ix = static_cast<long>(xo) + kx - pad;
            if (ix >= 0 && ix < static_cast<long>(w)) dst[ix] += src[xo];
          }
        }
      }
    }
  }
}

// Views an activation as [batch, channels, spatial].
struct Planes {
  std::size_t batch, channels, spatial;
};

template <class T>
Planes planes_of(const Tensor<T>& t) {
  if (t.rank() == 4) return {t.dim(0), t.dim(1), t.dim(2) * t.dim(3)};
  return {t.dim(0), t.dim(1), 1};
}

template <class T>
Tensor<T> conv_forward(const Tensor<T>& x, const LayerParams<T>& p, int k) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t out_c = p.weight.dim(0), hw = H * W;
  Tensor<T> y({B, out_c, H, W});
  Eigen::Map<const RowMat<T>> weight(p.weight.data(), static_cast<Eigen::Index>(out_c),
                                     static_cast<Eigen::Index>(C * k * k));
  Eigen::Map<const ColVec<T>> bias(p.bias.data(), static_cast<Eigen::Index>(out_c));
  RowMat<T> col;
  for (std::size_t b = 0; b < B; ++b) {
    im2col(x.data() + b * C * hw, C, H, W, k, col);
    Eigen::Map<RowMat<T>> out(y.data() + b * out_c * hw, static_cast<Eigen::Index>(out_c),
                              static_cast<Eigen::Index>(hw));
    out.noalias() = weight * col;
    out.colwise() += bias;
  }
  return y;
}

template <class T>
void conv_backward(const Tensor<T>& x, const Tensor<T>& dy, const LayerParams<T>& p, int k, Tensor<T>& dweight,
                   Tensor<T>& dbias, Tensor<T>& dx) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t out_c = p.weight.dim(0), hw = H * W;
  const auto rows = static_cast<Eigen::Index>(C * k * k);
  dweight = Tensor<T>(p.weight.shape());
  dbias = Tensor<T>(p.bias.shape());
  dx = Tensor<T>(x.shape());
  Eigen::Map<const RowMat<T>> weight(p.weight.data(), static_cast<Eigen::Index>(out_c), rows);
  Eigen::Map<RowMat<T>> dw(dweight.data(), static_cast<Eigen::Index>(out_c), rows);
  Eigen::Map<ColVec<T>> db(dbias.data(), static_cast<Eigen::Index>(out_c));
  RowMat<T> col, dcol;
  for (std::size_t b = 0; b < B; ++b) {
    Eigen::Map<const RowMat<T>> g(dy.data() + b * out_c * hw, static_cast<Eigen::Index>(out_c),
                                  static_cast<Eigen::Index>(hw));
    im2col(x.data() + b * C * hw, C, H, W, k, col);
    dw.noalias() += g * col.transpose();
    db += g.rowwise().sum();
    dcol.noalias() = weight.transpose() * g;
    col2im(dcol, C, H, W, k, dx.data() + b * C * hw);
  }
}

template <class T>
Tensor<T> dense_forward(const Tensor<T>& x, const LayerParams<T>& p) {
  const std::size_t B = x.dim(0), F = x.dim(1), U = p.weight.dim(0);
  Tensor<T> y({B, U});
  Eigen::Map<const RowMat<T>> in(x.data(), static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(F));
  Eigen::Map<const RowMat<T>> weight(p.weight.data(), static_cast<Eigen::Index>(U), static_cast<Eigen::Index>(F));
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(p.bias.data(), static_cast<Eigen::Index>(U));
  Eigen::Map<RowMat<T>> out(y.data(), static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(U));
  out.noalias() = in * weight.transpose();
  out.rowwise() += bias;
  return y;
}

template <class T>
void batchnorm_forward(const Tensor<T>& x, const LayerParams<T>& p, const LayerSpec& l, Mode mode,
                       LayerCache<T>& cache) {
  const Planes v = planes_of(x);
  const double count = static_cast<double>(v.batch * v.spatial);
  cache.mean.assign(v.channels, 0.0);
  cache.inv_std.assign(v.channels, 0.0);
  cache.variance.assign(v.channels, 0.0);
  for (std::size_t c = 0; c < v.channels; ++c) {
    double mean, var;
    if (mode == Mode::train) {
      double sum = 0.0;
      for (std::size_t b = 0; b < v.batch; ++b) {
        const T* s = x.data() + (b * v.channels + c) * v.spatial;
        for (std::size_t i = 0; i < v.spatial; ++i) sum += s[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (std::size_t b = 0; b < v.batch; ++b) {
        const T* s = x.data() + (b * v.channels + c) * v.spatial;
        for (std::size_t i = 0; i < v.spatial; ++i) {
          const double d = s[i] - mean;
          sq += d * d;
        }
      }
      var = sq / count;
    } else {
      mean = static_cast<double>(p.running_mean[c]);
      var = static_cast<double>(p.running_var[c]);
    }
    cache.mean[c] = mean;
    cache.variance[c] = var;
    cache.inv_std[c] = 1.0 / std::sqrt(var + l.epsilon);
  }
  cache.output = Tensor<T>(x.shape());
  for (std::size_t b = 0; b < v.batch; ++b) {
    for (std::size_t c = 0; c < v.channels; ++c) {
      const T* s = x.data() + (b * v.channels + c) * v.spatial;
      T* d = cache.output.data() + (b * v.channels + c) * v.spatial;
      const T scale = static_cast<T>(cache.inv_std[c] * static_cast<double>(p.gamma[c]));
      const T shift = static_cast<T>(static_cast<double>(p.beta[c]) - cache.mean[c] * scale);
      if constexpr (std::is_same_v<T, double>) {
        const double m = cache.mean[c], is = cache.inv_std[c], g = p.gamma[c], bt = p.beta[c];
        for (std::size_t i = 0; i < v.spatial; ++i) d[i] = g * ((s[i] - m) * is) + bt;
      } else {
        for (std::size_t i = 0; i < v.spatial; ++i) d[i] = s[i] * scale + shift;
      }
    }
  }
}

template <class T>
void batchnorm_backward(const Tensor<T>& x, const Tensor<T>& dy, const LayerParams<T>& p, const LayerCache<T>& cache,
                        Tensor<T>& dgamma, Tensor<T>& dbeta, Tensor<T>& dx) {
  const Planes v = planes_of(x);
  const double count = static_cast<double>(v.batch * v.spatial);
  dgamma = Tensor<T>(p.gamma.shape());
  dbeta = Tensor<T>(p.beta.shape());
  dx = Tensor<T>(x.shape());
  for (std::size_t c = 0; c < v.channels; ++c) {
    const double mean = cache.mean[c], inv_std = cache.inv_std[c];
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < v.batch; ++b) {
      const std::size_t off = (b * v.channels + c) * v.spatial;
      for (std::size_t i = 0; i < v.spatial; ++i) {
        const double g = dy[off + i];
        sum_dy += g;
        sum_dy_xhat += g * (x[off + i] - mean) * inv_std;
      }
    }
    dgamma[c] = static_cast<T>(sum_dy_xhat);
    dbeta[c] = static_cast<T>(sum_dy);
    const double k = static_cast<double>(p.gamma[c]) * inv_std / count;
    for (std::size_t b = 0; b < v.batch; ++b) {
      const std::size_t off = (b * v.channels + c) * v.spatial;
      for (std::size_t i = 0; i < v.spatial; ++i) {
        const double xhat = (x[off + i] - mean) * inv_std;
        dx[off + i] = static_cast<T>(k * (count * dy[off + i] - sum_dy - xhat * sum_dy_xhat));
      }
    }
  }
}

template <class T>
void maxpool_forward(const Tensor<T>& x, const LayerSpec& l, LayerCache<T>& cache) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t oh = pooled_size(H, l.window, l.stride), ow = pooled_size(W, l.window, l.stride);
  cache.output = Tensor<T>({B, C, oh, ow});
  cache.argmax.assign(cache.output.size(), 0);
  std::size_t o = 0;
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const T* plane = x.data() + bc * H * W;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
        const std::size_t y0 = oy * l.stride, x0 = ox * l.stride;
        std::size_t best = y0 * W + x0;
        T best_v = plane[best];
        for (int dy = 0; dy < l.window; ++dy) {
          for (int dx = 0; dx < l.window; ++dx) {
            const std::size_t idx = (y0 + dy) * W + x0 + dx;
            if (plane[idx] > best_v) {
              best_v = plane[idx];
              best = idx;
            }
          }
        }
        cache.output[o] = best_v;
        cache.argmax[o] = static_cast<std::uint32_t>(bc * H * W + best);
      }
    }
  }
}

template <class T>
void softmax_rows(const Tensor<T>& z, Tensor<T>& p) {
  const std::size_t B = z.dim(0), K = z.dim(1);
  p = Tensor<T>(z.shape());
  for (std::size_t b = 0; b < B; ++b) {
    const T* zi = z.data() + b * K;
    T* pi = p.data() + b * K;
    const T top = *std::max_element(zi, zi + K);
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) total += std::exp(static_cast<double>(zi[k] - top));
    for (std::size_t k = 0; k < K; ++k) pi[k] = static_cast<T>(std::exp(static_cast<double>(zi[k] - top)) / total);
  }
}

template <class T>
void relu_inplace(Tensor<T>& t) {
  for (auto& v : t.values()) v = v > T(0) ? v : T(0);
}

template <class T>
ForwardTrace<T> run_forward(const NetworkSpec& spec, const ParamStore<T>& params, const Tensor<T>& batch, Mode mode,
                            Rng* rng, bool keep_all) {
  if (batch.rank() != 4 || batch.dim(0) < 1 || batch.dim(1) != static_cast<std::size_t>(spec.channels) ||
      batch.dim(2) != static_cast<std::size_t>(spec.height) || batch.dim(3) != static_cast<std::size_t>(spec.width)) {
    fail(ErrorKind::ShapeMismatch, "batch " + shape_string(batch.shape()) + " does not match network input " +
                                       std::to_string(spec.channels) + "x" + std::to_string(spec.height) + "x" +
                                       std::to_string(spec.width));
  }
  if (params.layers.size() != spec.layers.size()) fail(ErrorKind::ShapeMismatch, "parameters do not match network");
  const auto sites = relu_sites(spec);
  ForwardTrace<T> trace;
  trace.mode = mode;
  trace.input = batch;
  trace.layers.resize(spec.layers.size());
  const std::size_t B = batch.dim(0);

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const Tensor<T>& x = trace.layer_input(i);
    LayerCache<T>& cache = trace.layers[i];
    switch (l.kind) {
      case LayerKind::conv2d:
        cache.output = conv_forward(x, params.layers[i], l.kernel);
        break;
      case LayerKind::batchnorm:
        batchnorm_forward(x, params.layers[i], l, mode, cache);
        break;
      case LayerKind::maxpool:
        maxpool_forward(x, l, cache);
        break;
      case LayerKind::dropout:
        cache.output = x;
        if (mode == Mode::train && l.rate > 0.0) {
          if (rng == nullptr) fail(ErrorKind::TraceMismatch, "train-mode dropout needs a generator");
          cache.mask = Tensor<T>(x.shape());
          const T keep = static_cast<T>(1.0 / (1.0 - l.rate));
          for (std::size_t j = 0; j < x.size(); ++j) {
            cache.mask[j] = rng->uniform() >= l.rate ? keep : T(0);
            cache.output[j] *= cache.mask[j];
          }
        }
        break;
      case LayerKind::flatten:
        cache.output = x;
        cache.output.reshape({B, x.size() / B});
        break;
      case LayerKind::dense:
        cache.output = dense_forward(x, params.layers[i]);
        break;
      case LayerKind::softmax:
        softmax_rows(x, cache.output);
        break;
    }
    if (sites[i]) relu_inplace(cache.output);
    if (!keep_all && i > 0) trace.layers[i - 1].output = Tensor<T>();
  }
  return trace;
}

}  // namespace detail

/// Train mode normalises with batch statistics, samples dropout masks from
/// `rng` and folds the batch statistics into the running averages.
template <class T>
ForwardTrace<T> forward(const NetworkSpec& spec, ParamStore<T>& params, const Tensor<T>& batch, Mode mode, Rng& rng) {
  ForwardTrace<T> trace = detail::run_forward(spec, params, batch, mode, &rng, true);
  if (mode == Mode::train) {
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
      if (spec.layers[i].kind != LayerKind::batchnorm) continue;
      const double m = spec.layers[i].momentum;
      auto& p = params.layers[i];
      const auto& cache = trace.layers[i];
      for (std::size_t c = 0; c < p.running_mean.size(); ++c) {
        p.running_mean[c] = static_cast<T>(m * p.running_mean[c] + (1.0 - m) * cache.mean[c]);
        p.running_var[c] = static_cast<T>(m * p.running_var[c] + (1.0 - m) * cache.variance[c]);
      }
    }
  }
  return trace;
}

/// Inference-mode class probabilities, [B, 5]. Parameters are not touched.
template <class T>
Tensor<T> infer(const NetworkSpec& spec, const ParamStore<T>& params, const Tensor<T>& batch) {
  auto trace = detail::run_forward(spec, params, batch, Mode::infer, nullptr, false);
  return std::move(trace.layers.back().output);
}

template <class T>
double l2_penalty(const NetworkSpec& spec, const ParamStore<T>& params) {
  double total = 0.0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const double lambda = spec.layers[i].l2;
    if (spec.layers[i].kind != LayerKind::dense || lambda == 0.0) continue;
    double sq = 0.0;
    for (const T w : params.layers[i].weight.values()) sq += static_cast<double>(w) * w;
    total += 0.5 * lambda * sq;
  }
  return total;
}

/// Mean categorical cross-entropy computed from the logits (log-sum-exp),
/// plus the L2 penalty of regularised dense layers.
template <class T>
double loss(const NetworkSpec& spec, const ParamStore<T>& params, const ForwardTrace<T>& trace,
            const Tensor<T>& labels) {
  const Tensor<T>& z = trace.logits();
  const std::size_t B = z.dim(0), K = z.dim(1);
  if (labels.rank() != 2 || labels.dim(0) != B || labels.dim(1) != K) {
    fail(ErrorKind::ShapeMismatch, "labels " + shape_string(labels.shape()) + " vs logits " + shape_string(z.shape()));
  }
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const T* zi = z.data() + b * K;
    const double top = *std::max_element(zi, zi + K);
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += std::exp(zi[k] - top);
    const double lse = top + std::log(s);
    for (std::size_t k = 0; k < K; ++k) total -= labels[b * K + k] * (zi[k] - lse);
  }
  return total / static_cast<double>(B) + l2_penalty(spec, params);
}

/// Exact gradients of `loss` for a train-mode trace.
template <class T>
GradientStore<T> backward(const NetworkSpec& spec, const ParamStore<T>& params, const ForwardTrace<T>& trace,
                          const Tensor<T>& labels) {
  if (trace.mode != Mode::train) fail(ErrorKind::TraceMismatch, "backward needs a train-mode trace");
  if (trace.layers.size() != spec.layers.size() || trace.layers.empty()) {
    fail(ErrorKind::TraceMismatch, "trace does not belong to this network");
  }
  const Tensor<T>& probs = trace.probabilities();
  const std::size_t B = probs.dim(0), K = probs.dim(1);
  if (labels.rank() != 2 || labels.dim(0) != B || labels.dim(1) != K) {
    fail(ErrorKind::TraceMismatch, "labels " + shape_string(labels.shape()) + " vs trace " + shape_string(probs.shape()));
  }
  const auto sites = relu_sites(spec);
  GradientStore<T> grads;
  grads.layers.resize(spec.layers.size());

  // Softmax + cross-entropy: dL/dz = (p - y) / B.
  Tensor<T> d(probs.shape());
  for (std::size_t j = 0; j < probs.size(); ++j) d[j] = (probs[j] - labels[j]) / static_cast<T>(B);

  for (std::size_t n = spec.layers.size() - 1; n-- > 0;) {
    const LayerSpec& l = spec.layers[n];
    const Tensor<T>& x = trace.layer_input(n);
    const LayerCache<T>& cache = trace.layers[n];
    auto& g = grads.layers[n];
    if (sites[n]) {
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (!(cache.output[j] > T(0))) d[j] = T(0);
      }
    }
    Tensor<T> dx;
    switch (l.kind) {
      case LayerKind::conv2d:
        detail::conv_backward(x, d, params.layers[n], l.kernel, g.weight, g.bias, dx);
        break;
      case LayerKind::batchnorm:
        detail::batchnorm_backward(x, d, params.layers[n], cache, g.gamma, g.beta, dx);
        break;
      case LayerKind::maxpool:
        dx = Tensor<T>(x.shape());
        for (std::size_t j = 0; j < d.size(); ++j) dx[cache.argmax[j]] += d[j];
        break;
      case LayerKind::dropout:
        dx = std::move(d);
        if (!cache.mask.empty()) {
          for (std::size_t j = 0; j < dx.size(); ++j) dx[j] *= cache.mask[j];
        }
        break;
      case LayerKind::flatten:
        dx = std::move(d);
        dx.reshape(x.shape());
        break;
      case LayerKind::dense: {
        const auto& p = params.layers[n];
        const auto Bi = static_cast<Eigen::Index>(x.dim(0));
        const auto F = static_cast<Eigen::Index>(x.dim(1));
        const auto U = static_cast<Eigen::Index>(p.weight.dim(0));
        g.weight = Tensor<T>(p.weight.shape());
        g.bias = Tensor<T>(p.bias.shape());
        dx = Tensor<T>(x.shape());
        Eigen::Map<const detail::RowMat<T>> in(x.data(), Bi, F);
        Eigen::Map<const detail::RowMat<T>> dy(d.data(), Bi, U);
        Eigen::Map<const detail::RowMat<T>> weight(p.weight.data(), U, F);
        Eigen::Map<detail::RowMat<T>> dw(g.weight.data(), U, F);
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(g.bias.data(), U);
        Eigen::Map<detail::RowMat<T>> din(dx.data(), Bi, F);
        dw.noalias() = dy.transpose() * in;
        if (l.l2 != 0.0) dw += static_cast<T>(l.l2) * weight;
        db = dy.colwise().sum();
        din.noalias() = dy * weight;
        break;
      }
      case LayerKind::softmax:
        fail(ErrorKind::TraceMismatch, "softmax must be the final layer");
    }
    d = std::move(dx);
  }
  grads.input = std::move(d);
  return grads;
}

/// Argmax with ties going to the lower grade.
template <class It>
int argmax_grade(It first, It last) {
  int best = 0;
  auto best_v = *first;
  int k = 0;
  for (It it = first; it != last; ++it, ++k) {
    if (*it > best_v) {
      best_v = *it;
      best = k;
    }
  }
  return best;
}

}  // namespace retina::nnet

#endif  // RETINA_NNET_ENGINE_HPP_
