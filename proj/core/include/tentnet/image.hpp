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

#ifndef TENTNET_IMAGE_HPP_
#define TENTNET_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tentnet/tensor.hpp"

namespace tentnet {

struct ImageSize {
  std::int64_t height = 224;
  std::int64_t width = 224;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

// Decodes a PNG or JPEG file into an (h,w,3) tensor with values in [0,1].
// Grayscale is replicated to three channels; alpha is dropped.
Tensor decode_image(const std::filesystem::path& path);

// Writes an (h,w,3) tensor as an 8-bit RGB PNG. Values are clamped to [0,1]
// and rounded to the nearest of 256 levels.
void write_png(const std::filesystem::path& path, const Tensor& image);

// The 8-bit values write_png would store.
std::vector<std::uint8_t> quantize(const Tensor& image);

// Bilinear resampling of an (h,w,c) tensor with half-pixel centers:
// source = (dst + 0.5) * in / out - 0.5, clamped to [0, in - 1].
// Same-size input is returned unchanged.
Tensor resize_bilinear(const Tensor& image, std::int64_t height, std::int64_t width);

bool has_image_extension(const std::filesystem::path& path);

}  // namespace tentnet

#endif  // TENTNET_IMAGE_HPP_
