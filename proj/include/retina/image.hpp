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
#ifndef RETINA_IMAGE_HPP_
#define RETINA_IMAGE_HPP_

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace retina {

/// H x W x 3 image of unit-interval intensities, stored row-major with
/// interleaved red, green, blue channels.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width, float fill = 0.0f)
      : height_(height), width_(width),
        pixels_(static_cast<std::size_t>(height) * width * kChannels, fill) {
    assert(height >= 0 && width >= 0);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return pixels_.empty(); }

  float& at(int row, int col, int channel) { return pixels_[index(row, col, channel)]; }
  float at(int row, int col, int channel) const { return pixels_[index(row, col, channel)]; }

  /// Mean over the three channels.
  float intensity(int row, int col) const {
    const std::size_t i = index(row, col, 0);
    return (pixels_[i] + pixels_[i + 1] + pixels_[i + 2]) / 3.0f;
  }

  void set_rgb(int row, int col, float r, float g, float b) {
    const std::size_t i = index(row, col, 0);
    pixels_[i] = r;
    pixels_[i + 1] = g;
    pixels_[i + 2] = b;
  }

  std::span<float> pixels() { return pixels_; }
  std::span<const float> pixels() const { return pixels_; }

  float min_value() const { return pixels_.empty() ? 0.0f : *std::ranges::min_element(pixels_); }
  float max_value() const { return pixels_.empty() ? 0.0f : *std::ranges::max_element(pixels_); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int row, int col, int channel) const {
    assert(row >= 0 && row < height_ && col >= 0 && col < width_);
    return (static_cast<std::size_t>(row) * width_ + col) * kChannels + channel;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> pixels_;
};

}  // namespace retina

#endif  // RETINA_IMAGE_HPP_
