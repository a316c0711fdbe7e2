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
#ifndef RETINA_SYNTHGEN_HPP_
#define RETINA_SYNTHGEN_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <vector>

#include "retina/dataio.hpp"
#include "retina/error.hpp"
#include "retina/image.hpp"
#include "retina/rng.hpp"

namespace retina::synth {

struct SynthConfig {
  std::size_t n_patients = 100;
  int image_size = 256;
  std::array<double, kNumGrades> class_probabilities{0.74, 0.07, 0.1448, 0.0252, 0.02};
  double eye_grade_agreement = 0.7;
  std::uint64_t seed = 0;

  void validate() const {
    if (image_size < 32) fail(ErrorKind::InvalidConfig, "image_size must be >= 32");
    double total = 0.0;
    for (const double p : class_probabilities) {
      if (!(p >= 0.0)) fail(ErrorKind::InvalidConfig, "class probabilities must be non-negative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) fail(ErrorKind::InvalidConfig, "class probabilities must sum to 1");
    if (!(eye_grade_agreement >= 0.0 && eye_grade_agreement <= 1.0)) {
      fail(ErrorKind::InvalidConfig, "eye_grade_agreement must be in [0, 1]");
    }
  }
};

/// Features placed while rendering, counted before compositing.
struct LesionCounts {
  int vessels = 0;
  int microaneurysms = 0;
  int exudates = 0;
  int blobs = 0;
  int stains = 0;

  int dots() const { return microaneurysms + exudates; }
};

struct RenderedEye {
  Image image;
  LesionCounts lesions;
  double center = 0.0;  // row and column of the disc centre
  double radius = 0.0;
};

namespace detail {

struct Rgb {
  float r, g, b;
};

/// Per-feature coverage mask, composited once so overlapping stamps of the
/// same stroke do not darken twice.
class Coverage {
 public:
  explicit Coverage(int size) : size_(size), alpha_(static_cast<std::size_t>(size) * size, 0.0f) {}

  void disc(double cy, double cx, double radius, float opacity = 1.0f) {
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1)));
    const int y1 = std::min(size_ - 1, static_cast<int>(std::ceil(cy + radius + 1)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1)));
    const int x1 = std::min(size_ - 1, static_cast<int>(std::ceil(cx + radius + 1)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d = std::hypot(y - cy, x - cx);
        const auto a = static_cast<float>(std::clamp(radius - d + 0.5, 0.0, 1.0)) * opacity;
        float& dst = alpha_[static_cast<std::size_t>(y) * size_ + x];
        dst = std::max(dst, a);
      }
    }
  }

  void paint(Image& img, Rgb color) const {
    for (int y = 0; y < size_; ++y) {
      for (int x = 0; x < size_; ++x) {
        const float a = alpha_[static_cast<std::size_t>(y) * size_ + x];
        if (a <= 0.0f) continue;
        img.at(y, x, 0) += a * (color.r - img.at(y, x, 0));
        img.at(y, x, 1) += a * (color.g - img.at(y, x, 1));
        img.at(y, x, 2) += a * (color.b - img.at(y, x, 2));
      }
    }
  }

 private:
  int size_;
  std::vector<float> alpha_;
};

struct Point {
  double y, x;
};

// Uniform point inside a disc of radius `r` around `c`.
inline Point point_in_disc(Rng& rng, Point c, double r) {
  const double rho = r * std::sqrt(rng.uniform());
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  return {c.y + rho * std::sin(phi), c.x + rho * std::cos(phi)};
}

}  // namespace detail

/// Dark background, shaded retina disc, curvilinear vessels, and lesions
/// whose number grows with the grade: 5g dark-red dots, 3g yellow dots,
/// 1-3 large blobs from grade 3, one irregular stain at grade 4.
inline RenderedEye render_eye(Grade grade, int size, Rng& rng) {
  using detail::Coverage;
  using detail::Point;
  RenderedEye out;
  out.image = Image(size, size, 0.0f);
  Image& img = out.image;
  const int g = grade.value();

  const Point center{(size - 1) / 2.0, (size - 1) / 2.0};
  const double radius = rng.uniform(0.45, 0.48) * size;
  out.center = center.y;
  out.radius = radius;
  const double tint = rng.uniform(0.92, 1.08);
  const detail::Rgb base{static_cast<float>(0.85 * tint), static_cast<float>(0.42 * tint), 0.16f};

  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double d = std::hypot(y - center.y, x - center.x);
      const double cover = std::clamp(radius - d + 0.5, 0.0, 1.0);
      if (cover <= 0.0) continue;
      const double shade = cover * (1.0 - 0.35 * (d / radius) * (d / radius));
      img.set_rgb(y, x, static_cast<float>(base.r * shade), static_cast<float>(base.g * shade),
                  static_cast<float>(base.b * shade));
    }
  }

  // Vessels: quadratic curves from near the disc centre out towards the rim.
  out.lesions.vessels = rng.between(3, 6);
  for (int v = 0; v < out.lesions.vessels; ++v) {
    Coverage stroke(size);
    const Point start = detail::point_in_disc(rng, center, 0.15 * radius);
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double reach = rng.uniform(0.7, 0.9) * radius;
    const Point end{center.y + reach * std::sin(phi), center.x + reach * std::cos(phi)};
    const Point bend = detail::point_in_disc(rng, {(start.y + end.y) / 2, (start.x + end.x) / 2}, 0.3 * radius);
    const double width = rng.uniform(0.004, 0.008) * size;
    const int steps = static_cast<int>(4 * reach) + 8;
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      const double a = (1 - t) * (1 - t), b = 2 * (1 - t) * t, c = t * t;
      stroke.disc(a * start.y + b * bend.y + c * end.y, a * start.x + b * bend.x + c * end.x, width * (1.2 - 0.5 * t));
    }
    stroke.paint(img, {0.48f, 0.12f, 0.06f});
  }

  const double lesion_zone = 0.78 * radius;
  if (g >= 1) {
    out.lesions.microaneurysms = 5 * g;
    Coverage dots(size);
    for (int i = 0; i < out.lesions.microaneurysms; ++i) {
      const Point p = detail::point_in_disc(rng, center, lesion_zone);
      dots.disc(p.y, p.x, std::max(1.2, 0.011 * size));
    }
    dots.paint(img, {0.30f, 0.05f, 0.03f});

    out.lesions.exudates = 3 * g;
    Coverage spots(size);
    for (int i = 0; i < out.lesions.exudates; ++i) {
      const Point p = detail::point_in_disc(rng, center, lesion_zone);
      spots.disc(p.y, p.x, std::max(1.2, 0.010 * size));
    }
    spots.paint(img, {0.98f, 0.90f, 0.35f});
  }
  if (g >= 3) {
    out.lesions.blobs = rng.between(1, 3);
    Coverage blobs(size);
    for (int i = 0; i < out.lesions.blobs; ++i) {
      const Point p = detail::point_in_disc(rng, center, lesion_zone);
      blobs.disc(p.y, p.x, 0.035 * size);
    }
    blobs.paint(img, {0.28f, 0.04f, 0.03f});
  }
  if (g == 4) {
    out.lesions.stains = 1;
    Coverage stain(size);
    const Point c = detail::point_in_disc(rng, center, 0.5 * radius);
    const int parts = rng.between(4, 6);
    for (int i = 0; i < parts; ++i) {
      const Point p = detail::point_in_disc(rng, c, 0.07 * size);
      stain.disc(p.y, p.x, rng.uniform(0.05, 0.09) * size, 0.85f);
    }
    stain.paint(img, {0.22f, 0.03f, 0.03f});
  }

  for (auto& v : img.pixels()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

struct SynthEye {
  ImageId id;
  Grade grade;
  RenderedEye eye;
};

/// Draws a grade from `probabilities` using one uniform variate.
inline Grade draw_grade(const std::array<double, kNumGrades>& probabilities, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int g = 0; g < kNumGrades; ++g) {
    acc += probabilities[static_cast<std::size_t>(g)];
    if (u < acc) return Grade::from_int(g);
  }
  for (int g = kNumGrades - 1; g >= 0; --g) {
    if (probabilities[static_cast<std::size_t>(g)] > 0.0) return Grade::from_int(g);
  }
  return Grade{};
}

/// Both eyes of patient `index` (ids start at 1). Each patient has its own
/// generator substream, so patients can be produced in any order.
inline std::array<SynthEye, 2> synthesize_patient(const SynthConfig& cfg, std::size_t index) {
  const std::uint64_t patient = index + 1;
  Rng rng(derive_seed(cfg.seed, patient));
  const Grade left = draw_grade(cfg.class_probabilities, rng);
  Grade right = left;
  if (rng.uniform() >= cfg.eye_grade_agreement) {
    const int shifted = left.value() + (rng.coin() ? 1 : -1);
    right = Grade::from_int(std::clamp(shifted, 0, kNumGrades - 1));
  }
  std::array<SynthEye, 2> eyes;
  eyes[0] = {{patient, EyeSide::left}, left, render_eye(left, cfg.image_size, rng)};
  eyes[1] = {{patient, EyeSide::right}, right, render_eye(right, cfg.image_size, rng)};
  return eyes;
}

/// Writes "<patient>_<eye>.png" for every eye plus labels.csv.
inline LabelManifest generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  LabelManifest manifest;
  for (std::size_t i = 0; i < cfg.n_patients; ++i) {
    for (const auto& eye : synthesize_patient(cfg, i)) {
      save_png(eye.eye.image, out_dir / (eye.id.str() + ".png"));
      manifest.add(eye.id, eye.grade);
    }
  }
  save_labels(manifest, out_dir / "labels.csv");
  return manifest;
}

}  // namespace retina::synth

#endif  // RETINA_SYNTHGEN_HPP_
