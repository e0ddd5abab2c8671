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

#include "tentnet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "tentnet/error.hpp"

namespace fs = std::filesystem;

namespace tentnet {

namespace {

void require_image(const Tensor& image, const char* op) {
  if (image.rank() != 3) {
    throw ShapeError(std::string(op) + " expects an (h,w,c) image, got " +
                     to_string(image.shape()));
  }
}

void clamp_unit(Tensor& image) {
  for (float& v : image.data()) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace

void AugmentationSpec::validate() const {
  if (!(max_rotation_deg >= 0.0f && max_rotation_deg <= 180.0f)) {
    throw InputError("rotation range must lie in [0, 180] degrees");
  }
  if (!(hflip_prob >= 0.0f && hflip_prob <= 1.0f)) {
    throw InputError("flip probability must lie in [0, 1]");
  }
  if (!(brightness_min > 0.0f && brightness_min <= brightness_max)) {
    throw InputError("brightness range must be positive and ordered");
  }
  if (!(zoom_min > 0.0f && zoom_min <= zoom_max && zoom_max <= 1.0f)) {
    throw InputError("zoom range must satisfy 0 < min <= max <= 1");
  }
}

Tensor rotate(const Tensor& image, double degrees) {
  require_image(image, "rotate");
  if (std::abs(degrees) > 180.0) {
    throw InputError("rotation of " + std::to_string(degrees) + " degrees exceeds 180");
  }
  if (degrees == 0.0) return image;
  const std::int64_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  const double cx = static_cast<double>(w - 1) / 2.0;
  const double cy = static_cast<double>(h - 1) / 2.0;
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  Tensor out(image.shape());
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double sx = std::clamp(cos_t * dx + sin_t * dy + cx, 0.0, static_cast<double>(w - 1));
      const double sy = std::clamp(-sin_t * dx + cos_t * dy + cy, 0.0, static_cast<double>(h - 1));
      const auto x0 = static_cast<std::int64_t>(std::floor(sx));
      const auto y0 = static_cast<std::int64_t>(std::floor(sy));
      const std::int64_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const auto fx = static_cast<float>(sx - static_cast<double>(x0));
      const auto fy = static_cast<float>(sy - static_cast<double>(y0));
      const float* p00 = image.raw() + (y0 * w + x0) * c;
      const float* p01 = image.raw() + (y0 * w + x1) * c;
      const float* p10 = image.raw() + (y1 * w + x0) * c;
      const float* p11 = image.raw() + (y1 * w + x1) * c;
      float* dst = out.raw() + (y * w + x) * c;
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const float top = p00[ch] + (p01[ch] - p00[ch]) * fx;
        const float bottom = p10[ch] + (p11[ch] - p10[ch]) * fx;
        dst[ch] = top + (bottom - top) * fy;
      }
    }
  }
  clamp_unit(out);
  return out;
}

Tensor hflip(const Tensor& image) {
  require_image(image, "hflip");
  const std::int64_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  Tensor out(image.shape());
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const float* src = image.raw() + (y * w + (w - 1 - x)) * c;
      std::copy(src, src + c, out.raw() + (y * w + x) * c);
    }
  }
  return out;
}

Tensor adjust_brightness(const Tensor& image, double factor) {
  require_image(image, "adjust_brightness");
  if (!(factor > 0.0)) {
    throw InputError("brightness factor must be positive, got " + std::to_string(factor));
  }
  Tensor out = image;
  const auto f = static_cast<float>(factor);
  for (float& v : out.data()) v *= f;
  clamp_unit(out);
  return out;
}

Tensor zoom_crop(const Tensor& image, double scale, double dx, double dy) {
  require_image(image, "zoom_crop");
  if (!(scale > 0.0 && scale <= 1.0)) {
    throw InputError("zoom scale must lie in (0, 1], got " + std::to_string(scale));
  }
  const std::int64_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  const std::int64_t crop_h = std::max<std::int64_t>(1, std::lround(scale * static_cast<double>(h)));
  const std::int64_t crop_w = std::max<std::int64_t>(1, std::lround(scale * static_cast<double>(w)));
  const std::int64_t top = std::lround(static_cast<double>(h - crop_h) / 2.0 + dy);
  const std::int64_t left = std::lround(static_cast<double>(w - crop_w) / 2.0 + dx);
  if (top < 0 || left < 0 || top + crop_h > h || left + crop_w > w) {
    throw InputError("zoom_crop window " + std::to_string(crop_h) + "x" + std::to_string(crop_w) +
                     " at (" + std::to_string(top) + "," + std::to_string(left) +
                     ") leaves the image");
  }
  if (crop_h == h && crop_w == w) return image;
  Tensor crop(Shape{crop_h, crop_w, c});
  for (std::int64_t y = 0; y < crop_h; ++y) {
    const float* src = image.raw() + ((top + y) * w + left) * c;
    std::copy(src, src + crop_w * c, crop.raw() + y * crop_w * c);
  }
  Tensor out = resize_bilinear(crop, h, w);
  clamp_unit(out);
  return out;
}

Tensor apply_transform(const Tensor& image, const TransformDescriptor& t) {
  require_image(image, "apply_transform");
  Tensor out = rotate(image, t.rotation_deg);
  if (t.flip) out = hflip(out);
  out = adjust_brightness(out, t.brightness);
  const std::int64_t h = out.dim(0), w = out.dim(1);
  const double slack_y =
      static_cast<double>(h - std::max<std::int64_t>(1, std::lround(t.zoom * static_cast<double>(h))));
  const double slack_x =
      static_cast<double>(w - std::max<std::int64_t>(1, std::lround(t.zoom * static_cast<double>(w))));
  return zoom_crop(out, t.zoom, t.jitter_x * slack_x / 2.0, t.jitter_y * slack_y / 2.0);
}

TransformDescriptor draw_transform(const AugmentationSpec& spec, Rng& rng) {
  TransformDescriptor t;
  t.rotation_deg = static_cast<float>(rng.uniform(-spec.max_rotation_deg, spec.max_rotation_deg));
  t.flip = rng.bernoulli(spec.hflip_prob);
  t.brightness = static_cast<float>(rng.uniform(spec.brightness_min, spec.brightness_max));
  t.zoom = static_cast<float>(rng.uniform(spec.zoom_min, spec.zoom_max));
  t.jitter_x = static_cast<float>(rng.uniform(-1.0, 1.0));
  t.jitter_y = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

std::vector<LabeledImage> augment_to_count(const std::vector<LabeledImage>& originals,
                                           const AugmentationSpec& spec) {
  spec.validate();
  if (originals.empty()) throw InputError("augment_to_count needs at least one original");
  const std::int64_t class_index = originals.front().class_index;
  for (const LabeledImage& item : originals) {
    if (item.class_index != class_index) {
      throw InputError("augment_to_count: originals span several classes");
    }
    if (!item.is_original()) {
      throw InputError("augment_to_count: " + item.path.string() + " is not an original");
    }
  }
  const std::size_t n = originals.size();
  if (spec.target_per_class < n) {
    throw InputError("target of " + std::to_string(spec.target_per_class) +
                     " images is below the class size " + std::to_string(n));
  }
  std::vector<LabeledImage> out = originals;
  out.reserve(spec.target_per_class);
  for (std::size_t j = 0; j < spec.target_per_class - n; ++j) {
    const LabeledImage& source = originals[j % n];
    Rng rng(derive_seed({spec.seed, static_cast<std::uint64_t>(class_index), j}));
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_aug%04zu.png", j);
    LabeledImage item;
    item.path = source.path.parent_path() / (source.path.stem().string() + suffix);
    item.class_index = class_index;
    item.provenance = AugmentedImage{source.path, draw_transform(spec, rng)};
    out.push_back(std::move(item));
  }
  return out;
}

Dataset augment_dataset(const Dataset& dataset, const AugmentationSpec& spec) {
  Dataset out;
  out.class_names = dataset.class_names;
  out.seed = spec.seed;
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    std::vector<LabeledImage> originals;
    for (const LabeledImage& item : dataset.items) {
      if (item.class_index == static_cast<std::int64_t>(c) && item.is_original()) {
        originals.push_back(item);
      }
    }
    if (originals.empty()) {
      throw InputError("class '" + dataset.class_names[c] + "' has no original images");
    }
    std::vector<LabeledImage> expanded = augment_to_count(originals, spec);
    out.items.insert(out.items.end(), std::make_move_iterator(expanded.begin()),
                     std::make_move_iterator(expanded.end()));
  }
  return out;
}

Dataset export_dataset(const Dataset& dataset, const fs::path& output_dir) {
  Dataset out = dataset;
  std::map<fs::path, fs::path> moved;
  for (const std::string& name : dataset.class_names) fs::create_directories(output_dir / name);
  for (LabeledImage& item : out.items) {
    if (!item.is_original()) continue;
    const fs::path target =
        output_dir / dataset.class_names.at(static_cast<std::size_t>(item.class_index)) /
        item.path.filename();
    fs::copy_file(item.path, target, fs::copy_options::overwrite_existing);
    moved[item.path] = target;
    item.path = target;
  }
  for (LabeledImage& item : out.items) {
    auto* aug = std::get_if<AugmentedImage>(&item.provenance);
    if (aug == nullptr) continue;
    const Tensor rendered = apply_transform(decode_image(aug->source), aug->transform);
    const fs::path target =
        output_dir / dataset.class_names.at(static_cast<std::size_t>(item.class_index)) /
        item.path.filename();
    write_png(target, rendered);
    if (auto it = moved.find(aug->source); it != moved.end()) aug->source = it->second;
    item.path = target;
  }
  write_manifest_csv(output_dir / "manifest.csv", out);
  return out;
}

const Tensor& ImageLoader::source(const fs::path& path) {
  auto it = cache_.find(path);
  if (it == cache_.end()) {
    it = cache_.emplace(path, resize_bilinear(decode_image(path), size_.height, size_.width)).first;
  }
  return it->second;
}

Tensor ImageLoader::load(const LabeledImage& item) {
  if (const auto* aug = std::get_if<AugmentedImage>(&item.provenance)) {
    return apply_transform(source(aug->source), aug->transform);
  }
  return source(item.path);
}

}  // namespace tentnet
