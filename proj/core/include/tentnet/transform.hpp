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

#ifndef TENTNET_TRANSFORM_HPP_
#define TENTNET_TRANSFORM_HPP_

#include <string>
#include <string_view>

namespace tentnet {

// Exact parameters of one augmentation, applied in field order:
// rotate, optional horizontal flip, brightness, zoom-crop.
struct TransformDescriptor {
  float rotation_deg = 0.0f;
  bool flip = false;
  float brightness = 1.0f;
  // Crop side as a fraction of the image side, in (0, 1].
  float zoom = 1.0f;
  // Crop-center offset as a fraction of the available slack, in [-1, 1].
  float jitter_x = 0.0f;
  float jitter_y = 0.0f;

  friend bool operator==(const TransformDescriptor&, const TransformDescriptor&) = default;
};

// "rot=..;flip=..;bright=..;zoom=..;jx=..;jy=.." with shortest round-trip
// float formatting, so parse(to_string(d)) == d.
std::string to_string(const TransformDescriptor& descriptor);
TransformDescriptor parse_transform(std::string_view text);

}  // namespace tentnet

#endif  // TENTNET_TRANSFORM_HPP_
