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

#ifndef TENTNET_DATASET_HPP_
#define TENTNET_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tentnet/image.hpp"
#include "tentnet/tensor.hpp"
#include "tentnet/transform.hpp"

namespace tentnet {

struct OriginalImage {
  friend bool operator==(const OriginalImage&, const OriginalImage&) = default;
};

struct AugmentedImage {
  std::filesystem::path source;
  TransformDescriptor transform;
  friend bool operator==(const AugmentedImage&, const AugmentedImage&) = default;
};

using Provenance = std::variant<OriginalImage, AugmentedImage>;

struct LabeledImage {
  std::filesystem::path path;
  std::int64_t class_index = 0;
  Provenance provenance;

  bool is_original() const { return std::holds_alternative<OriginalImage>(provenance); }
  friend bool operator==(const LabeledImage&, const LabeledImage&) = default;
};

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<LabeledImage> items;
  std::uint64_t seed = 0;

  std::size_t num_classes() const { return class_names.size(); }
  std::vector<std::size_t> class_counts() const;
  std::vector<LabeledImage> items_of_class(std::int64_t class_index) const;
  // Throws InputError when an item's class index or provenance is invalid.
  void validate() const;
};

struct ScanResult {
  Dataset dataset;
  // Entries that were not images (or not regular files) and were ignored.
  std::vector<std::filesystem::path> skipped;
};

// Reads root/<class_name>/*.{png,jpg,jpeg}. Classes are sorted by directory
// name and items by path within each class.
ScanResult scan_dataset(const std::filesystem::path& root);

// Decodes `item.path` and resizes it to (1, h, w, 3) with values in [0,1].
Tensor load_image(const LabeledImage& item, ImageSize target);

struct Split {
  Dataset train;
  Dataset val;
};

// Per class: seeded shuffle, the first floor(train_fraction * n) items go to
// train and the rest to validation. Items keep their dataset order within
// each side.
Split stratified_split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

// One row per item: path,class,provenance,source,transform,split.
// `split_label` fills the split column for every row (may be empty).
void append_manifest_rows(std::string& csv, const Dataset& dataset,
                          const std::string& split_label);
std::string manifest_header();
void write_manifest_csv(const std::filesystem::path& path, const Dataset& dataset,
                        const std::string& split_label = "");

}  // namespace tentnet

#endif  // TENTNET_DATASET_HPP_
