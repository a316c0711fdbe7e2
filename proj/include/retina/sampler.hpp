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
#ifndef RETINA_SAMPLER_HPP_
#define RETINA_SAMPLER_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "retina/dataio.hpp"
#include "retina/error.hpp"
#include "retina/image.hpp"
#include "retina/rng.hpp"

namespace retina::sampler {

struct ClassDistribution {
  std::array<std::size_t, kNumGrades> counts{};
  std::array<double, kNumGrades> frequencies{};
  std::size_t total = 0;

  std::size_t present_classes() const {
    return static_cast<std::size_t>(std::ranges::count_if(counts, [](std::size_t c) { return c > 0; }));
  }
};

inline ClassDistribution class_distribution(const std::array<std::size_t, kNumGrades>& counts) {
  ClassDistribution d;
  d.counts = counts;
  for (const auto c : counts) d.total += c;
  if (d.total == 0) fail(ErrorKind::EmptyManifest, "no labelled images");
  for (std::size_t g = 0; g < kNumGrades; ++g) {
    d.frequencies[g] = static_cast<double>(counts[g]) / static_cast<double>(d.total);
  }
  return d;
}

inline ClassDistribution class_distribution(const LabelManifest& manifest) {
  return class_distribution(manifest.counts());
}

/// Weight of a single image of each grade; all images of a grade share it.
struct SamplingWeights {
  std::array<double, kNumGrades> per_image{};

  double class_mass(std::size_t grade, const ClassDistribution& dist) const {
    return per_image[grade] * static_cast<double>(dist.counts[grade]);
  }
};

/// Inverse-frequency weights: every grade present in the data receives the
/// same total mass 1 / (number of present grades). Absent grades get none.
inline SamplingWeights build_sampling_weights(const ClassDistribution& dist) {
  const std::size_t present = dist.present_classes();
  if (present == 0) fail(ErrorKind::EmptyManifest, "no labelled images");
  SamplingWeights w;
  for (std::size_t g = 0; g < kNumGrades; ++g) {
    if (dist.counts[g] > 0) w.per_image[g] = (1.0 / static_cast<double>(present)) / static_cast<double>(dist.counts[g]);
  }
  return w;
}

/// Uniform over images, i.e. the dataset's own class distribution.
inline SamplingWeights natural_weights(const ClassDistribution& dist) {
  if (dist.total == 0) fail(ErrorKind::EmptyManifest, "no labelled images");
  SamplingWeights w;
  for (std::size_t g = 0; g < kNumGrades; ++g) {
    if (dist.counts[g] > 0) w.per_image[g] = 1.0 / static_cast<double>(dist.total);
  }
  return w;
}

/// Categorical draw over a fixed list of items by cumulative weight.
class WeightedDraw {
 public:
  WeightedDraw(std::span<const Grade> grades, const SamplingWeights& weights) {
    cumulative_.reserve(grades.size());
    double acc = 0.0;
    for (const Grade g : grades) {
      acc += weights.per_image[static_cast<std::size_t>(g.value())];
      cumulative_.push_back(acc);
    }
    if (!(acc > 0.0)) fail(ErrorKind::EmptyManifest, "sampling weights are all zero");
  }

  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    const auto it = std::ranges::upper_bound(cumulative_, u);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

/// `batch_size` independent draws with replacement, in manifest order.
inline std::vector<ImageId> sample_batch(const LabelManifest& manifest, const SamplingWeights& weights,
                                         std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) return {};
  std::vector<ImageId> ids;
  std::vector<Grade> grades;
  ids.reserve(manifest.size());
  grades.reserve(manifest.size());
  for (const auto& [id, grade] : manifest.entries()) {
    ids.push_back(id);
    grades.push_back(grade);
  }
  const WeightedDraw table(grades, weights);
  std::vector<ImageId> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(ids[table.draw(rng)]);
  return batch;
}

struct AugmentSpec {
  double rotation = 0.0;  // degrees in [0, 360)
  bool hflip = false;
  bool vflip = false;
};

inline AugmentSpec draw_augment(Rng& rng) {
  AugmentSpec spec;
  spec.rotation = rng.uniform() * 360.0;
  spec.hflip = rng.coin();
  spec.vflip = rng.coin();
  return spec;
}

/// Rotates about the image centre by `rotation` degrees (counter-clockwise
/// as displayed, rows growing downward) with bilinear sampling, then flips.
/// Samples falling outside the source read as `fill`.
inline Image augment(const Image& img, const AugmentSpec& spec, float fill = 0.5f) {
  const int h = img.height(), w = img.width();
  Image out(h, w, fill);
  if (spec.rotation == 0.0) {
    out = img;
  } else {
    const double theta = spec.rotation * std::numbers::pi / 180.0;
    const double cs = std::cos(theta), sn = std::sin(theta);
    const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    const auto sample = [&](int r, int c, int ch) -> double {
      if (r < 0 || r >= h || c < 0 || c >= w) return fill;
      return img.at(r, c, ch);
    };
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // Inverse map: source = R(-theta) (dest - centre) + centre, with the
        // y axis pointing down.
        const double dy = y - cy, dx = x - cx;
        const double sx = cs * dx - sn * dy + cx;
        const double sy = sn * dx + cs * dy + cy;
        const double fy0 = std::floor(sy), fx0 = std::floor(sx);
        const int y0 = static_cast<int>(fy0), x0 = static_cast<int>(fx0);
        const double ty = sy - fy0, tx = sx - fx0;
        if (y0 < -1 || y0 >= h || x0 < -1 || x0 >= w) continue;
        for (int ch = 0; ch < Image::kChannels; ++ch) {
          const double a = sample(y0, x0, ch), b = sample(y0, x0 + 1, ch);
          const double c = sample(y0 + 1, x0, ch), d = sample(y0 + 1, x0 + 1, ch);
          const double top = a + tx * (b - a);
          const double bottom = c + tx * (d - c);
          out.at(y, x, ch) = static_cast<float>(std::clamp(top + ty * (bottom - top), 0.0, 1.0));
        }
      }
    }
  }
  if (spec.hflip || spec.vflip) {
    Image flipped(h, w);
    for (int y = 0; y < h; ++y) {
      const int sy = spec.vflip ? h - 1 - y : y;
      for (int x = 0; x < w; ++x) {
        const int sx = spec.hflip ? w - 1 - x : x;
        for (int ch = 0; ch < Image::kChannels; ++ch) flipped.at(y, x, ch) = out.at(sy, sx, ch);
      }
    }
    out = std::move(flipped);
  }
  return out;
}

}  // namespace retina::sampler

#endif  // RETINA_SAMPLER_HPP_
