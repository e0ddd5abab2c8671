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

#ifndef TENTNET_AUGMENT_HPP_
#define TENTNET_AUGMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "tentnet/dataset.hpp"
#include "tentnet/image.hpp"
#include "tentnet/rng.hpp"
#include "tentnet/tensor.hpp"
#include "tentnet/transform.hpp"

namespace tentnet {

struct AugmentationSpec {
  // Rotation is drawn uniformly from [-max_rotation_deg, +max_rotation_deg].
  float max_rotation_deg = 25.0f;
  float hflip_prob = 0.5f;
  float brightness_min = 0.7f;
  float brightness_max = 1.3f;
  float zoom_min = 0.8f;
  float zoom_max = 1.0f;
  std::size_t target_per_class = 421;
  std::uint64_t seed = 0;

  // Throws InputError on out-of-range fields.
  void validate() const;
};

// All image transforms take and return (h,w,c) tensors with values in [0,1].

// Rotation about the image center with bilinear sampling; samples that fall
// outside the source take the nearest edge value.
Tensor rotate(const Tensor& image, double degrees);
Tensor hflip(const Tensor& image);
// Multiply then clamp to [0,1]. factor must be positive.
Tensor adjust_brightness(const Tensor& image, double factor);
// Crops a round(scale*h) x round(scale*w) window whose center is offset from
// the image center by (dx, dy) pixels, then resizes it back to h x w.
Tensor zoom_crop(const Tensor& image, double scale, double dx, double dy);

// Applies the descriptor's transforms in order.
Tensor apply_transform(const Tensor& image, const TransformDescriptor& transform);

// Draws one descriptor from the ranges in `spec`.
TransformDescriptor draw_transform(const AugmentationSpec& spec, Rng& rng);

// Returns the originals followed by (target - n) augmented items. Sources are
// used round-robin; item j's parameters come from a generator seeded by
// (spec.seed, class_index, j).
std::vector<LabeledImage> augment_to_count(const std::vector<LabeledImage>& originals,
                                           const AugmentationSpec& spec);

// augment_to_count applied to each class. Only original items are used as
// sources.
Dataset augment_dataset(const Dataset& dataset, const AugmentationSpec& spec);

// Renders `dataset` into output_dir/<class>/ (originals copied byte for byte,
// augmented items written as PNG at the source resolution) and writes
// output_dir/manifest.csv. Returns the dataset with its new paths.
Dataset export_dataset(const Dataset& dataset, const std::filesystem::path& output_dir);

// Produces (h,w,3) tensors at a fixed size for any dataset item. Decoded
// sources are cached; augmented items are re-rendered from their descriptor.
class ImageLoader {
 public:
  explicit ImageLoader(ImageSize size) : size_(size) {}

  Tensor load(const LabeledImage& item);
  ImageSize size() const { return size_; }

 private:
  const Tensor& source(const std::filesystem::path& path);

  ImageSize size_;
  std::map<std::filesystem::path, Tensor> cache_;
};

}  // namespace tentnet

#endif  // TENTNET_AUGMENT_HPP_
