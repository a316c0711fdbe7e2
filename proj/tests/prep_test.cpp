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

#include "retina/prep.hpp"
#include "retina/rng.hpp"
#include "oracles/oracles.hpp"
#include "test_util.hpp"

namespace retina::prep {
namespace {

using testing::disc_image;

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::InvalidConfig;
}

using oracle::dense_blur_at;

Image random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Image img(h, w);
  for (auto& v : img.pixels()) v = static_cast<float>(rng.uniform());
  return img;
}

Image rotate90(const Image& img) {
  // Clockwise: out(r, c) = in(n - 1 - c, r).
  const int n = img.height();
  Image out(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = img.at(n - 1 - c, r, ch);
    }
  }
  return out;
}

TEST(CropToContent, UniformGreyKeepsEverything) {
  const Image grey(40, 60, 0.5f);
  EXPECT_EQ(crop_to_content(grey, PrepConfig{}), (CropRect{0, 40, 0, 60}));
}

TEST(CropToContent, AllBlackIsEmpty) {
  EXPECT_EQ(kind_of([] { crop_to_content(Image(30, 30, 0.0f), PrepConfig{}); }), ErrorKind::EmptyContent);
}

TEST(CropToContent, OffCentreDiscMatchesReferenceScan) {
  // Frozen from tests/oracles/crop_scan.py.
  const CropRect rect = crop_to_content(disc_image(400, 400, 200, 150, 100), PrepConfig{});
  EXPECT_EQ(rect, (CropRect{101, 300, 51, 250}));
  EXPECT_NEAR(rect.top, 100, 2);
  EXPECT_NEAR(rect.bottom, 300, 2);
  EXPECT_NEAR(rect.left, 50, 2);
  EXPECT_NEAR(rect.right, 250, 2);
}

TEST(CropToContent, CentralRowBelowThresholdIsEmpty) {
  // Content only in the top band: the centre row is dark.
  Image img(50, 50, 0.0f);
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 50; ++c) img.set_rgb(r, c, 1, 1, 1);
  }
  EXPECT_EQ(kind_of([&] { crop_to_content(img, PrepConfig{}); }), ErrorKind::EmptyContent);
}

TEST(EstimateGeometry, CentredDisc) {
  const RetinaGeometry g = estimate_geometry(disc_image(400, 400, 200, 200, 100));
  EXPECT_NEAR(g.radius, 100.0, 1.0);
  EXPECT_NEAR(g.center_row, 200.0, 1.0);
  EXPECT_NEAR(g.center_col, 200.0, 1.0);
}

TEST(EstimateGeometry, WhiteImageLightsWholeRow) {
  const RetinaGeometry g = estimate_geometry(Image(21, 57, 1.0f));
  EXPECT_DOUBLE_EQ(g.radius, 28.0);
}

TEST(EstimateGeometry, BlackImageHasNoRetina) {
  EXPECT_EQ(kind_of([] { estimate_geometry(Image(20, 20, 0.0f)); }), ErrorKind::NoRetina);
}

TEST(LocalMeanSubtract, FlatFieldBecomesMidGrey) {
  const RetinaGeometry geo{10, 10, 9};
  Image img(20, 20);
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 20; ++c) img.set_rgb(r, c, 0.8f, 0.37f, 0.11f);
  }
  const Image out = local_mean_subtract(img, geo, PrepConfig{});
  for (const float v : out.pixels()) EXPECT_EQ(v, 0.5f);
}

TEST(LocalMeanSubtract, ZeroGainGivesMidGrey) {
  PrepConfig cfg;
  cfg.subtract_gain = 0.0;
  const Image out = local_mean_subtract(random_image(16, 16, 1), {8, 8, 7}, cfg);
  for (const float v : out.pixels()) EXPECT_EQ(v, 0.5f);
}

TEST(LocalMeanSubtract, SinglePixelMatchesDenseConvolution) {
  Image img(21, 21, 0.0f);
  img.set_rgb(10, 10, 1, 1, 1);
  PrepConfig cfg;
  const RetinaGeometry geo{10.5, 10, 60.0};  // sigma = 60 / 30 = 2
  const Image out = local_mean_subtract(img, geo, cfg);

  float best = -1;
  int best_r = -1, best_c = -1;
  for (int r = 0; r < 21; ++r) {
    for (int c = 0; c < 21; ++c) {
      const double expect = std::clamp(4.0 * (img.at(r, c, 0) - dense_blur_at(img, r, c, 0, 2.0)) + 0.5, 0.0, 1.0);
      EXPECT_NEAR(out.at(r, c, 0), expect, 1e-5);
      if (out.at(r, c, 0) > best) {
        best = out.at(r, c, 0);
        best_r = r;
        best_c = c;
      }
    }
  }
  EXPECT_EQ(best_r, 10);
  EXPECT_EQ(best_c, 10);
  EXPECT_LT(out.at(10, 12, 0), 0.5f);  // the dip around the spike
}

TEST(GaussianBlur, SeparableEqualsDenseOnRandomInputs) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image img = random_image(32, 32, seed);
    const double sigma = 0.7 + seed * 0.9;
    const auto blurred = gaussian_blur(img, sigma);
    for (int r = 0; r < 32; ++r) {
      for (int c = 0; c < 32; ++c) {
        for (int ch = 0; ch < 3; ++ch) {
          ASSERT_NEAR(blurred[(r * 32 + c) * 3 + ch], dense_blur_at(img, r, c, ch, sigma), 1e-5);
        }
      }
    }
  }
}

TEST(LocalMeanSubtract, CommutesWithQuarterTurn) {
  const Image img = random_image(33, 33, 42);
  const RetinaGeometry geo{16, 16, 90};  // sigma 3
  const Image a = rotate90(local_mean_subtract(img, geo, PrepConfig{}));
  const Image b = local_mean_subtract(rotate90(img), geo, PrepConfig{});
  for (std::size_t i = 0; i < a.pixels().size(); ++i) ASSERT_NEAR(a.pixels()[i], b.pixels()[i], 1e-5);
}

TEST(CircularMask, NoShrinkGreysOnlyOutsideFullRadius) {
  PrepConfig cfg;
  cfg.mask_area_reduction = 0.0;
  const Image img(41, 41, 0.9f);
  const RetinaGeometry geo{20, 20, 15};
  const Image out = apply_circular_mask(img, geo, cfg);
  for (int r = 0; r < 41; ++r) {
    for (int c = 0; c < 41; ++c) {
      const double d = std::hypot(r - 20.0, c - 20.0);
      EXPECT_EQ(out.at(r, c, 1), d > 15.0 ? 0.5f : 0.9f) << r << "," << c;
    }
  }
}

TEST(CircularMask, CentreKeptAndRimGreyed) {
  const Image img(201, 201, 0.9f);
  const RetinaGeometry geo{100, 100, 100};
  const Image out = apply_circular_mask(img, geo, PrepConfig{});
  EXPECT_EQ(out.at(100, 100, 0), 0.9f);
  // distance 97 = 0.97 r > sqrt(0.9) r = 94.87
  EXPECT_EQ(out.at(100, 197, 0), 0.5f);
  EXPECT_EQ(out.at(100, 194, 0), 0.9f);
  EXPECT_NEAR(mask_radius(geo, PrepConfig{}), 100.0 * std::sqrt(0.9), 1e-12);
}

TEST(ResizeToCanvas, LandscapeGetsSideBands) {
  PrepConfig cfg;
  Image img(768, 1024, 0.2f);
  const Image out = resize_to_canvas(img, cfg);
  ASSERT_EQ(out.height(), 512);
  ASSERT_EQ(out.width(), 512);
  const CanvasLayout layout = canvas_layout(768, 1024, 512);
  EXPECT_EQ(layout.content_height, 384);
  EXPECT_EQ(layout.pad_top, 64);
  EXPECT_EQ(out.at(63, 100, 0), 0.5f);
  EXPECT_EQ(out.at(64, 100, 0), 0.2f);
  EXPECT_EQ(out.at(447, 100, 0), 0.2f);
  EXPECT_EQ(out.at(448, 100, 0), 0.5f);
}

TEST(ResizeToCanvas, PortraitGetsBandsLeftAndRight) {
  PrepConfig cfg;
  const Image out = resize_to_canvas(Image(100, 50, 0.2f), cfg);
  const CanvasLayout layout = canvas_layout(100, 50, 512);
  EXPECT_EQ(layout.content_width, 256);
  EXPECT_EQ(layout.pad_left, 128);
  EXPECT_EQ(out.at(200, 127, 0), 0.5f);
  EXPECT_EQ(out.at(200, 128, 0), 0.2f);
  EXPECT_EQ(out.at(200, 383, 0), 0.2f);
  EXPECT_EQ(out.at(200, 384, 0), 0.5f);
}

TEST(ResizeToCanvas, OddPaddingGoesBottomRight) {
  PrepConfig cfg;
  cfg.canvas_size = 16;
  const CanvasLayout layout = canvas_layout(16, 5, 16);
  EXPECT_EQ(layout.content_width, 5);
  EXPECT_EQ(layout.pad_left, 5);  // 5 left, 6 right
  const Image out = resize_to_canvas(Image(16, 5, 0.1f), cfg);
  EXPECT_EQ(out.at(0, 4, 0), 0.5f);
  EXPECT_EQ(out.at(0, 5, 0), 0.1f);
  EXPECT_EQ(out.at(0, 9, 0), 0.1f);
  EXPECT_EQ(out.at(0, 10, 0), 0.5f);
}

TEST(ResizeToCanvas, SameSizeIsIdentity) {
  PrepConfig cfg;
  const Image img = random_image(512, 512, 7);
  EXPECT_EQ(resize_to_canvas(img, cfg), img);
}

TEST(Preprocess, SyntheticDiscHasGreyCornersAndFixedShape) {
  Image img = disc_image(300, 380, 150, 190, 130, 0.7f);
  PrepConfig cfg;
  const Image out = preprocess(img, cfg);
  ASSERT_EQ(out.height(), 512);
  ASSERT_EQ(out.width(), 512);
  for (const auto& [r, c] : {std::pair{0, 0}, {0, 511}, {511, 0}, {511, 511}}) {
    for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(out.at(r, c, ch), 0.5f);
  }
  EXPECT_GE(out.min_value(), 0.0f);
  EXPECT_LE(out.max_value(), 1.0f);
}

TEST(Preprocess, FlatFieldCarriesNoDetail) {
  const Image out = preprocess(Image(200, 260, 0.6f), PrepConfig{});
  for (const float v : out.pixels()) EXPECT_EQ(v, 0.5f);
}

TEST(Preprocess, LesionContrastIncreases) {
  Image img = disc_image(256, 256, 127.5, 127.5, 118, 0.0f);
  for (int r = 0; r < 256; ++r) {
    for (int c = 0; c < 256; ++c) {
      if (std::hypot(r - 127.5, c - 127.5) <= 118) img.set_rgb(r, c, 0.82f, 0.41f, 0.16f);
    }
  }
  const int lr = 150, lc = 100;
  for (int r = lr - 3; r <= lr + 3; ++r) {
    for (int c = lc - 3; c <= lc + 3; ++c) {
      if (std::hypot(r - lr, c - lc) <= 3.0) img.set_rgb(r, c, 0.45f, 0.20f, 0.08f);
    }
  }
  PrepConfig cfg;
  PrepTrace trace;
  const Image out = preprocess(img, cfg, &trace);
  const double raw = std::abs(img.intensity(lr, lc) - 0.5);
  const int mr = static_cast<int>(std::lround((lr - trace.crop.top + 0.5) * trace.layout.scale - 0.5)) +
                 trace.layout.pad_top;
  const int mc = static_cast<int>(std::lround((lc - trace.crop.left + 0.5) * trace.layout.scale - 0.5)) +
                 trace.layout.pad_left;
  const double processed = std::abs(out.intensity(mr, mc) - 0.5);
  EXPECT_GT(processed, raw);
}

TEST(Preprocess, OutsideMaskIsExactlyBackground) {
  const Image img = disc_image(300, 300, 150, 150, 140, 0.8f);
  PrepConfig cfg;
  cfg.canvas_size = 128;
  PrepTrace trace;
  const Image out = preprocess(img, cfg, &trace);
  const double keep = mask_radius(trace.geometry, cfg);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) {
      const double sy = (y - trace.layout.pad_top + 0.5) / trace.layout.scale - 0.5;
      const double sx = (x - trace.layout.pad_left + 0.5) / trace.layout.scale - 0.5;
      if (std::hypot(sy - trace.geometry.center_row, sx - trace.geometry.center_col) > keep + 2.0) {
        ASSERT_EQ(out.at(y, x, 0), 0.5f) << y << "," << x;
      }
    }
  }
}

TEST(Preprocess, Deterministic) {
  const Image img = disc_image(220, 240, 110, 120, 100, 0.6f);
  EXPECT_EQ(preprocess(img, PrepConfig{}), preprocess(img, PrepConfig{}));
}

TEST(Preprocess, ErrorsCarryTheTag) {
  try {
    preprocess(Image(64, 64, 0.0f), PrepConfig{}, "17_left");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyContent);
    EXPECT_NE(std::string(e.what()).find("17_left"), std::string::npos);
  }
}

TEST(PrepConfig, RejectsBadValues) {
  PrepConfig cfg;
  cfg.canvas_size = 8;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.mask_area_reduction = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.row_threshold_frac = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
}  // namespace retina::prep
