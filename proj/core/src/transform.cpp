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

#include "tentnet/transform.hpp"

#include <charconv>
#include <set>

#include "tentnet/error.hpp"

namespace tentnet {

std::string to_string(const TransformDescriptor& d) {
  auto fmt = [](float v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
  };
  return "rot=" + fmt(d.rotation_deg) + ";flip=" + (d.flip ? "1" : "0") +
         ";bright=" + fmt(d.brightness) + ";zoom=" + fmt(d.zoom) + ";jx=" + fmt(d.jitter_x) +
         ";jy=" + fmt(d.jitter_y);
}

TransformDescriptor parse_transform(std::string_view text) {
  TransformDescriptor d;
  std::set<std::string> seen;
  while (!text.empty()) {
    const std::size_t end = text.find(';');
    const std::string_view field = text.substr(0, end);
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    const std::size_t eq = field.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("malformed transform field '" + std::string(field) + "'");
    }
    const std::string key(field.substr(0, eq));
    const std::string_view value = field.substr(eq + 1);
    float number = 0.0f;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), number);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw InputError("malformed transform value '" + std::string(field) + "'");
    }
    if (key == "rot") {
      d.rotation_deg = number;
    } else if (key == "flip") {
      d.flip = number != 0.0f;
    } else if (key == "bright") {
      d.brightness = number;
    } else if (key == "zoom") {
      d.zoom = number;
    } else if (key == "jx") {
      d.jitter_x = number;
    } else if (key == "jy") {
      d.jitter_y = number;
    } else {
      throw InputError("unknown transform field '" + key + "'");
    }
    seen.insert(key);
  }
  if (seen.size() != 6) throw InputError("transform descriptor is missing fields");
  return d;
}

}  // namespace tentnet
