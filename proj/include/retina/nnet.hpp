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
#ifndef RETINA_NNET_HPP_
#define RETINA_NNET_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "retina/dataio.hpp"
#include "retina/image.hpp"
#include "retina/nnet/engine.hpp"
#include "retina/nnet/params.hpp"
#include "retina/nnet/spec.hpp"
#include "retina/nnet/tensor.hpp"
#include "retina/rng.hpp"

namespace retina {

using ProbabilityVector = std::array<double, kNumGrades>;

inline Grade predicted_grade(const ProbabilityVector& p) {
  return Grade::from_int(nnet::argmax_grade(p.begin(), p.end()));
}

namespace nnet {

struct Network {
  NetworkSpec spec;
  ParamStore<float> params;
};

inline Network build_grading_network(int input_size, double width_scale = 1.0, std::uint64_t seed = 0,
                                    double l2 = 1e-4) {
  Network net;
  net.spec = grading_net_spec(input_size, width_scale, l2);
  Rng rng(seed);
  net.params = init_params<float>(net.spec, rng);
  return net;
}

/// Packs HWC images into an NCHW batch.
template <class T = float>
Tensor<T> to_batch(std::span<const Image* const> images) {
  if (images.empty()) fail(ErrorKind::ShapeMismatch, "empty batch");
  const auto h = static_cast<std::size_t>(images.front()->height());
  const auto w = static_cast<std::size_t>(images.front()->width());
  Tensor<T> batch({images.size(), 3, h, w});
  for (std::size_t b = 0; b < images.size(); ++b) {
    const Image& img = *images[b];
    if (static_cast<std::size_t>(img.height()) != h || static_cast<std::size_t>(img.width()) != w) {
      fail(ErrorKind::ShapeMismatch, "images in a batch must share one size");
    }
    const auto px = img.pixels();
    for (std::size_t c = 0; c < 3; ++c) {
      T* plane = batch.data() + (b * 3 + c) * h * w;
      for (std::size_t i = 0; i < h * w; ++i) plane[i] = static_cast<T>(px[i * 3 + c]);
    }
  }
  return batch;
}

struct Prediction {
  ProbabilityVector probabilities{};
  Grade grade;
};

/// Inference in chunks of `chunk` images.
inline std::vector<Prediction> predict_proba(const NetworkSpec& spec, const ParamStore<float>& params,
                                             std::span<const Image* const> images, std::size_t chunk = 32) {
  std::vector<Prediction> out;
  out.reserve(images.size());
  for (std::size_t start = 0; start < images.size(); start += chunk) {
    const auto part = images.subspan(start, std::min(chunk, images.size() - start));
    const Tensor<float> probs = infer(spec, params, to_batch<float>(part));
    for (std::size_t b = 0; b < part.size(); ++b) {
      Prediction p;
      for (std::size_t k = 0; k < kNumClasses; ++k) p.probabilities[k] = probs[b * kNumClasses + k];
      p.grade = predicted_grade(p.probabilities);
      out.push_back(p);
    }
  }
  return out;
}

inline std::vector<Prediction> predict_proba(const NetworkSpec& spec, const ParamStore<float>& params,
                                             const std::vector<Image>& images, std::size_t chunk = 32) {
  std::vector<const Image*> ptrs;
  ptrs.reserve(images.size());
  for (const auto& img : images) ptrs.push_back(&img);
  return predict_proba(spec, params, std::span<const Image* const>(ptrs), chunk);
}

}  // namespace nnet
}  // namespace retina

#endif  // RETINA_NNET_HPP_
