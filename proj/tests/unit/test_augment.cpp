/*
 * Copyright 2026 The tentnet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "synthetic.hpp"
#include "tentnet/augment.hpp"
#include "tentnet/error.hpp"
#include "tentnet/rng.hpp"

namespace tentnet {
namespace {

namespace fs = std::filesystem;

Tensor ramp_image(std::int64_t h, std::int64_t w, std::int64_t c) {
  Tensor t(Shape{h, w, c});
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      for (std::int64_t k = 0; k < c; ++k)
        t.raw()[(y * w + x) * c + k] = static_cast<float>((y * w + x) * c + k + 1) /
                                       static_cast<float>(h * w * c + 1);
  return t;
}

float at(const Tensor& t, std::int64_t y, std::int64_t x, std::int64_t k = 0) {
  return t.raw()[(y * t.dim(1) + x) * t.dim(2) + k];
}

// Peak signal-to-noise ratio for unit-range values over the central square
// that stays inside the frame under any rotation.
double central_psnr(const Tensor& a, const Tensor& b) {
  const std::int64_t n = a.dim(0);
  const std::int64_t lo = n / 4, hi = n - n / 4;
  double se = 0.0;
  std::size_t count = 0;
  for (std::int64_t y = lo; y < hi; ++y)
    for (std::int64_t x = lo; x < hi; ++x)
      for (std::int64_t k = 0; k < a.dim(2); ++k) {
        const double d = at(a, y, x, k) - at(b, y, x, k);
        se += d * d;
        ++count;
      }
  return 10.0 * std::log10(1.0 / (se / static_cast<double>(count)));
}

TEST(Rotate, ZeroIsIdentity) {
  const Tensor img = ramp_image(5, 7, 3);
  EXPECT_EQ(rotate(img, 0.0), img);
}

TEST(Rotate, ConstantImageIsInvariant) {
  Tensor img(Shape{9, 9, 3});
  for (float& v : img.data()) v = 0.4f;
  for (double deg : {-25.0, 13.0, 90.0, 180.0}) {
    const Tensor r = rotate(img, deg);
    for (float v : r.data()) EXPECT_FLOAT_EQ(v, 0.4f);
  }
}

TEST(Rotate, QuarterTurnPermutesPixels) {
  // With the center fixed, +90 degrees maps out(y, x) = in(n-1-x, y).
  const std::int64_t n = 6;
  const Tensor img = ramp_image(n, n, 1);
  const Tensor r = rotate(img, 90.0);
  for (std::int64_t y = 0; y < n; ++y)
    for (std::int64_t x = 0; x < n; ++x) EXPECT_NEAR(at(r, y, x), at(img, n - 1 - x, y), 1e-5);
}

TEST(Rotate, RoundTripKeepsCenter) {
  const Tensor img = testing::render_shape(1, 64, 5);
  const Tensor back = rotate(rotate(img, 25.0), -25.0);
  EXPECT_GT(central_psnr(img, back), 25.0);
}

TEST(Rotate, RejectsOverHalfTurn) {
  EXPECT_THROW(rotate(ramp_image(3, 3, 1), 181.0), InputError);
  EXPECT_THROW(rotate(Tensor(Shape{3, 3}), 10.0), ShapeError);
}

TEST(Flip, IsAnInvolution) {
  const Tensor img = ramp_image(4, 5, 3);
  EXPECT_EQ(hflip(hflip(img)), img);
  const Tensor column = ramp_image(6, 1, 3);
  EXPECT_EQ(hflip(column), column);
}

TEST(Flip, SmallExample) {
  const Tensor img(Shape{2, 2, 1}, {1, 2, 3, 4});
  EXPECT_EQ(hflip(img), Tensor(Shape{2, 2, 1}, {2, 1, 4, 3}));
}

TEST(Brightness, ScalesAndClamps) {
  const Tensor img(Shape{1, 2, 1}, {0.5f, 0.9f});
  const Tensor out = adjust_brightness(img, 1.3);
  EXPECT_NEAR(out[0], 0.65f, 1e-6);
  EXPECT_EQ(out[1], 1.0f);
  EXPECT_THROW(adjust_brightness(img, 0.0), InputError);
}

TEST(Zoom, FullScaleIsIdentity) {
  const Tensor img = ramp_image(5, 5, 3);
  EXPECT_EQ(zoom_crop(img, 1.0, 0.0, 0.0), img);
}

TEST(Zoom, HalfScaleOfFourByFour) {
  // The centered 2x2 crop is rows/cols 1..2; upsampling 2 -> 4 with
  // half-pixel centers weights the second sample by 0, 1/4, 3/4, 1.
  const Tensor img = ramp_image(4, 4, 1);
  const Tensor out = zoom_crop(img, 0.5, 0.0, 0.0);
  const double w[4] = {0.0, 0.25, 0.75, 1.0};
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      const double top = (1 - w[x]) * at(img, 1, 1) + w[x] * at(img, 1, 2);
      const double bottom = (1 - w[x]) * at(img, 2, 1) + w[x] * at(img, 2, 2);
      EXPECT_NEAR(at(out, y, x), (1 - w[y]) * top + w[y] * bottom, 1e-6) << y << "," << x;
    }
}

TEST(Zoom, WindowMustStayInside) {
  const Tensor img = ramp_image(10, 10, 1);
  EXPECT_NO_THROW(zoom_crop(img, 0.8, 1.0, -1.0));
  EXPECT_THROW(zoom_crop(img, 0.8, 2.0, 0.0), InputError);
  EXPECT_THROW(zoom_crop(img, 1.5, 0.0, 0.0), InputError);
}

TEST(Transform, OutputStaysInUnitRange) {
  AugmentationSpec spec;
  Rng rng(8);
  const Tensor img = testing::render_shape(4, 24, 2);
  for (int i = 0; i < 30; ++i) {
    const TransformDescriptor t = draw_transform(spec, rng);
    EXPECT_LE(std::abs(t.rotation_deg), 25.0f);
    EXPECT_GE(t.brightness, 0.7f);
    EXPECT_LE(t.brightness, 1.3f);
    EXPECT_GE(t.zoom, 0.8f);
    EXPECT_LE(t.zoom, 1.0f);
    EXPECT_EQ(parse_transform(to_string(t)), t);
    const Tensor out = apply_transform(img, t);
    EXPECT_EQ(out.shape(), img.shape());
    for (float v : out.data()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(Transform, ParseRejectsGarbage) {
  EXPECT_THROW(parse_transform("rot=abc"), InputError);
  EXPECT_THROW(parse_transform("nonsense"), InputError);
}

TEST(Spec, Validate) {
  AugmentationSpec spec;
  EXPECT_NO_THROW(spec.validate());
  spec.hflip_prob = 1.5f;
  EXPECT_THROW(spec.validate(), InputError);
  spec = {};
  spec.brightness_min = 1.4f;
  EXPECT_THROW(spec.validate(), InputError);
  spec = {};
  spec.zoom_max = 1.2f;
  EXPECT_THROW(spec.validate(), InputError);
  spec = {};
  spec.max_rotation_deg = -1.0f;
  EXPECT_THROW(spec.validate(), InputError);
}

Dataset fake_dataset(std::size_t classes, std::size_t per_class) {
  Dataset d;
  for (std::size_t c = 0; c < classes; ++c) {
    d.class_names.push_back("k" + std::to_string(c));
    for (std::size_t i = 0; i < per_class; ++i)
      d.items.push_back({fs::path("k" + std::to_string(c)) / ("i" + std::to_string(i) + ".png"),
                         static_cast<std::int64_t>(c), OriginalImage{}});
  }
  return d;
}

TEST(Expand, SixClassesOf21To421) {
  AugmentationSpec spec;
  spec.seed = 1;
  const Dataset d = fake_dataset(6, 21);
  const Dataset out = augment_dataset(d, spec);
  EXPECT_EQ(d.items.size(), 126u);
  EXPECT_EQ(out.items.size(), 2526u);
  EXPECT_EQ(out.class_counts(), std::vector<std::size_t>(6, 421));
  EXPECT_NO_THROW(out.validate());
}

TEST(Expand, TargetEqualToSizeReturnsOriginals) {
  AugmentationSpec spec;
  spec.target_per_class = 21;
  const Dataset d = fake_dataset(2, 21);
  EXPECT_EQ(augment_dataset(d, spec).items, d.items);
  spec.target_per_class = 20;
  EXPECT_THROW(augment_dataset(d, spec), InputError);
}

TEST(Expand, SourcesUsedRoundRobin) {
  AugmentationSpec spec;
  spec.target_per_class = 100;
  const Dataset d = fake_dataset(1, 7);
  const Dataset out = augment_dataset(d, spec);
  std::map<fs::path, int> uses;
  for (const auto& item : out.items)
    if (const auto* aug = std::get_if<AugmentedImage>(&item.provenance)) ++uses[aug->source];
  ASSERT_EQ(uses.size(), 7u);
  int lo = 1 << 30, hi = 0;
  for (const auto& [path, count] : uses) {
    lo = std::min(lo, count);
    hi = std::max(hi, count);
  }
  EXPECT_LE(hi - lo, 1);
}

TEST(Expand, DeterministicPerSeed) {
  AugmentationSpec spec;
  spec.target_per_class = 40;
  spec.seed = 77;
  const Dataset d = fake_dataset(3, 5);
  EXPECT_EQ(augment_dataset(d, spec).items, augment_dataset(d, spec).items);
  AugmentationSpec other = spec;
  other.seed = 78;
  EXPECT_NE(augment_dataset(d, spec).items, augment_dataset(d, other).items);
}

TEST(Export, RendersEveryItem) {
  const fs::path root = fs::temp_directory_path() / "tentnet_augment_export";
  fs::remove_all(root);
  testing::write_shape_tree(root / "in", 2, 16, 4, 2);
  AugmentationSpec spec;
  spec.target_per_class = 5;
  const Dataset aug = augment_dataset(scan_dataset(root / "in").dataset, spec);
  const Dataset out = export_dataset(aug, root / "out");
  ASSERT_EQ(out.items.size(), 10u);
  EXPECT_TRUE(fs::exists(root / "out" / "manifest.csv"));
  const ScanResult rescanned = scan_dataset(root / "out");
  EXPECT_EQ(rescanned.dataset.items.size(), 10u);
  ImageLoader loader(ImageSize{16, 16});
  for (const auto& item : out.items) {
    EXPECT_TRUE(fs::exists(item.path));
    EXPECT_EQ(quantize(loader.load(item)), quantize(decode_image(item.path)));
  }
  fs::remove_all(root);
}

}  // namespace
}  // namespace tentnet
