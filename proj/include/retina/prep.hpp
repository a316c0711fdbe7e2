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
#ifndef RETINA_PREP_HPP_
#define RETINA_PREP_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "retina/error.hpp"
#include "retina/image.hpp"

namespace retina::prep {

struct PrepConfig {
  int canvas_size = 512;
  double row_threshold_frac = 0.02;
  double sigma_over_radius = 1.0 / 30.0;
  double subtract_gain = 4.0;
  /// Fraction of the retina disc area removed at the rim. Area, not radius:
  /// the kept radius is radius * sqrt(1 - reduction).
  double mask_area_reduction = 0.10;
  float background_level = 0.5f;

  void validate() const {
    if (canvas_size < 16) fail(ErrorKind::InvalidConfig, "canvas_size must be >= 16");
    if (!(row_threshold_frac > 0.0 && row_threshold_frac < 1.0)) {
      fail(ErrorKind::InvalidConfig, "row_threshold_frac must be in (0, 1)");
    }
    if (!(sigma_over_radius > 0.0)) fail(ErrorKind::InvalidConfig, "sigma_over_radius must be positive");
    if (!(subtract_gain >= 0.0)) fail(ErrorKind::InvalidConfig, "subtract_gain must be non-negative");
    if (!(mask_area_reduction >= 0.0 && mask_area_reduction < 1.0)) {
      fail(ErrorKind::InvalidConfig, "mask_area_reduction must be in [0, 1)");
    }
  }
};

/// Inclusive top/left, exclusive bottom/right.
struct CropRect {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;

  int height() const { return bottom - top; }
  int width() const { return right - left; }
  friend bool operator==(const CropRect&, const CropRect&) = default;
};

struct RetinaGeometry {
  double center_row = 0.0;
  double center_col = 0.0;
  double radius = 0.0;
};

namespace detail {

// Scans outward from the middle index; stops before the first entry below t.
inline std::pair<int, int> scan_from_center(const std::vector<double>& sums, double frac, const char* axis) {
  const double peak = *std::ranges::max_element(sums);
  const double threshold = frac * peak;
  const int n = static_cast<int>(sums.size());
  const int mid = n / 2;
  if (peak <= 0.0 || sums[mid] < threshold) {
    fail(ErrorKind::EmptyContent, std::string("central ") + axis + " is below the content threshold");
  }
  int lo = mid;
  while (lo - 1 >= 0 && sums[lo - 1] >= threshold) --lo;
  int hi = mid + 1;
  while (hi < n && sums[hi] >= threshold) ++hi;
  return {lo, hi};
}

}  // namespace detail

/// Bounds of the retina content: rows and columns whose summed mean-channel
/// intensity stays above a fraction of the peak sum, scanning outward from
/// the centre.
inline CropRect crop_to_content(const Image& img, const PrepConfig& cfg) {
  if (img.height() < 3 || img.width() < 3) fail(ErrorKind::EmptyContent, "image smaller than 3x3");
  std::vector<double> rows(img.height(), 0.0), cols(img.width(), 0.0);
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      const double v = img.intensity(r, c);
      rows[r] += v;
      cols[c] += v;
    }
  }
  const auto [top, bottom] = detail::scan_from_center(rows, cfg.row_threshold_frac, "row");
  const auto [left, right] = detail::scan_from_center(cols, cfg.row_threshold_frac, "column");
  return {top, bottom, left, right};
}

inline Image crop(const Image& img, const CropRect& rect) {
  Image out(rect.height(), rect.width());
  for (int r = 0; r < rect.height(); ++r) {
    for (int c = 0; c < rect.width(); ++c) {
      for (int ch = 0; ch < Image::kChannels; ++ch) out.at(r, c, ch) = img.at(rect.top + r, rect.left + c, ch);
    }
  }
  return out;
}

/// Radius and centre from the lit extent of the central row, where "lit"
/// means brighter than a tenth of that row's mean.
inline RetinaGeometry estimate_geometry(const Image& img) {
  if (img.empty()) fail(ErrorKind::NoRetina, "empty image");
  const int row = img.height() / 2;
  double mean = 0.0;
  for (int c = 0; c < img.width(); ++c) mean += img.intensity(row, c);
  mean /= img.width();

  const double threshold = mean / 10.0;
  int first = -1, last = -1, lit = 0;
  for (int c = 0; c < img.width(); ++c) {
    if (img.intensity(row, c) > threshold) {
      if (first < 0) first = c;
      last = c;
      ++lit;
    }
  }
  if (lit < 8) fail(ErrorKind::NoRetina, "only " + std::to_string(lit) + " lit pixels on the central row");
  return {img.height() / 2.0, (first + last) / 2.0, (last - first) / 2.0};
}

/// Normalised 1-D Gaussian truncated at 4 sigma; index k holds offset k - radius.
inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * (k * k) / (sigma * sigma));
    kernel[k + radius] = w;
    total += w;
  }
  for (auto& w : kernel) w /= total;
  return kernel;
}

/// Separable Gaussian blur with border replication, returned in double
/// precision (H x W x 3, interleaved like Image).
inline std::vector<double> gaussian_blur(const Image& img, double sigma) {
  const int h = img.height(), w = img.width();
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  constexpr int C = Image::kChannels;

  std::vector<double> horizontal(static_cast<std::size_t>(h) * w * C, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc[C] = {0.0, 0.0, 0.0};
      for (int k = -radius; k <= radius; ++k) {
        const int cc = std::clamp(c + k, 0, w - 1);
        const double wk = kernel[k + radius];
        for (int ch = 0; ch < C; ++ch) acc[ch] += wk * img.at(r, cc, ch);
      }
      for (int ch = 0; ch < C; ++ch) horizontal[(static_cast<std::size_t>(r) * w + c) * C + ch] = acc[ch];
    }
  }

  std::vector<double> out(horizontal.size(), 0.0);
  for (int r = 0; r < h; ++r) {
    for (int k = -radius; k <= radius; ++k) {
      const int rr = std::clamp(r + k, 0, h - 1);
      const double wk = kernel[k + radius];
      const double* src = &horizontal[static_cast<std::size_t>(rr) * w * C];
      double* dst = &out[static_cast<std::size_t>(r) * w * C];
      for (int i = 0; i < w * C; ++i) dst[i] += wk * src[i];
    }
  }
  return out;
}

/// out = clamp(gain * (img - G * img) + 0.5, 0, 1) with sigma tied to the
/// retina radius.
inline Image local_mean_subtract(const Image& img, const RetinaGeometry& geo, const PrepConfig& cfg) {
  if (!(geo.radius > 0.0)) fail(ErrorKind::NoRetina, "non-positive retina radius");
  const auto blurred = gaussian_blur(img, cfg.sigma_over_radius * geo.radius);
  Image out(img.height(), img.width());
  const auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double v = cfg.subtract_gain * (static_cast<double>(src[i]) - blurred[i]) + 0.5;
    dst[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

inline double mask_radius(const RetinaGeometry& geo, const PrepConfig& cfg) {
  return geo.radius * std::sqrt(1.0 - cfg.mask_area_reduction);
}

inline Image apply_circular_mask(const Image& img, const RetinaGeometry& geo, const PrepConfig& cfg) {
  Image out = img;
  const double keep = mask_radius(geo, cfg);
  const double keep2 = keep * keep;
  for (int r = 0; r < img.height(); ++r) {
    const double dr = r - geo.center_row;
    for (int c = 0; c < img.width(); ++c) {
      const double dc = c - geo.center_col;
      if (dr * dr + dc * dc > keep2) {
        out.set_rgb(r, c, cfg.background_level, cfg.background_level, cfg.background_level);
      }
    }
  }
  return out;
}

/// Placement of the scaled content inside the square canvas.
struct CanvasLayout {
  double scale = 1.0;
  int content_height = 0;
  int content_width = 0;
  int pad_top = 0;
  int pad_left = 0;
};

inline CanvasLayout canvas_layout(int height, int width, int canvas) {
  CanvasLayout layout;
  layout.scale = static_cast<double>(canvas) / std::max(height, width);
  layout.content_height = std::clamp(static_cast<int>(std::lround(height * layout.scale)), 1, canvas);
  layout.content_width = std::clamp(static_cast<int>(std::lround(width * layout.scale)), 1, canvas);
  layout.pad_top = (canvas - layout.content_height) / 2;
  layout.pad_left = (canvas - layout.content_width) / 2;
  return layout;
}

/// Bilinear rescale of the longer side to canvas_size, centred on a
/// background-filled square. Odd padding puts the extra pixel bottom/right.
inline Image resize_to_canvas(const Image& img, const PrepConfig& cfg) {
  const int S = cfg.canvas_size;
  const int h = img.height(), w = img.width();
  const CanvasLayout layout = canvas_layout(h, w, S);
  Image out(S, S, cfg.background_level);

  const double ry = static_cast<double>(h) / layout.content_height;
  const double rx = static_cast<double>(w) / layout.content_width;
  for (int y = 0; y < layout.content_height; ++y) {
    const double sy = std::clamp((y + 0.5) * ry - 0.5, 0.0, h - 1.0);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - y0;
    for (int x = 0; x < layout.content_width; ++x) {
      const double sx = std::clamp((x + 0.5) * rx - 0.5, 0.0, w - 1.0);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - x0;
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        // a + t (b - a) keeps equal neighbours exact.
        const double a = img.at(y0, x0, ch), b = img.at(y0, x1, ch);
        const double c = img.at(y1, x0, ch), d = img.at(y1, x1, ch);
        const double top = a + fx * (b - a);
        const double bottom = c + fx * (d - c);
        out.at(layout.pad_top + y, layout.pad_left + x, ch) = static_cast<float>(top + fy * (bottom - top));
      }
    }
  }
  return out;
}

/// Everything the pipeline decided for one image, kept for inspection.
struct PrepTrace {
  CropRect crop;
  RetinaGeometry geometry;
  CanvasLayout layout;
};

/// crop -> geometry -> local-mean subtraction -> circular mask -> canvas.
inline Image preprocess(const Image& img, const PrepConfig& cfg, PrepTrace* trace = nullptr) {
  cfg.validate();
  const CropRect rect = crop_to_content(img, cfg);
  const Image cropped = crop(img, rect);
  const RetinaGeometry geo = estimate_geometry(cropped);
  const Image subtracted = local_mean_subtract(cropped, geo, cfg);
  const Image masked = apply_circular_mask(subtracted, geo, cfg);
  if (trace != nullptr) *trace = {rect, geo, canvas_layout(cropped.height(), cropped.width(), cfg.canvas_size)};
  return resize_to_canvas(masked, cfg);
}

/// As above; failures are re-raised with `tag` (usually the image id) prefixed.
inline Image preprocess(const Image& img, const PrepConfig& cfg, std::string_view tag) {
  try {
    return preprocess(img, cfg);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::EmptyContent || e.kind() == ErrorKind::NoRetina) {
      const std::string what = e.what();
      const auto colon = what.find(": ");
      fail(e.kind(), std::string(tag) + ": " + (colon == std::string::npos ? what : what.substr(colon + 2)));
    }
    throw;
  }
}

}  // namespace retina::prep

#endif  // RETINA_PREP_HPP_
