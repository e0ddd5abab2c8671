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

#include "tentnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "tentnet/error.hpp"
#include "tentnet/rng.hpp"

namespace fs = std::filesystem;

namespace tentnet {

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const LabeledImage& item : items) ++counts.at(static_cast<std::size_t>(item.class_index));
  return counts;
}

std::vector<LabeledImage> Dataset::items_of_class(std::int64_t class_index) const {
  std::vector<LabeledImage> out;
  for (const LabeledImage& item : items) {
    if (item.class_index == class_index) out.push_back(item);
  }
  return out;
}

void Dataset::validate() const {
  if (class_names.empty()) throw InputError("dataset has no classes");
  std::set<std::string> unique(class_names.begin(), class_names.end());
  if (unique.size() != class_names.size()) throw InputError("duplicate class names");
  std::set<fs::path> originals;
  for (const LabeledImage& item : items) {
    if (item.is_original()) originals.insert(item.path);
  }
  for (const LabeledImage& item : items) {
    if (item.class_index < 0 || item.class_index >= static_cast<std::int64_t>(num_classes())) {
      throw InputError("item " + item.path.string() + " has class index " +
                       std::to_string(item.class_index) + " outside [0, " +
                       std::to_string(num_classes()) + ")");
    }
    if (const auto* aug = std::get_if<AugmentedImage>(&item.provenance)) {
      if (!originals.contains(aug->source) && !fs::exists(aug->source)) {
        throw InputError("augmented item " + item.path.string() +
                         " refers to missing original " + aug->source.string());
      }
    }
  }
}

ScanResult scan_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw InputError("dataset root " + root.string() + " is not a directory");
  }
  ScanResult result;
  std::vector<fs::path> class_dirs;
  for (const fs::directory_entry& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) {
      class_dirs.push_back(entry.path());
    } else {
      result.skipped.push_back(entry.path());
    }
  }
  if (class_dirs.empty()) throw InputError("empty dataset: no class directories in " + root.string());
  std::sort(class_dirs.begin(), class_dirs.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });
  Dataset& dataset = result.dataset;
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    std::vector<fs::path> files;
    for (const fs::directory_entry& entry : fs::directory_iterator(class_dirs[c])) {
      const std::string name = entry.path().filename().string();
      if (entry.is_regular_file() && !name.starts_with(".") &&
          has_image_extension(entry.path())) {
        files.push_back(entry.path());
      } else {
        result.skipped.push_back(entry.path());
      }
    }
    const std::string class_name = class_dirs[c].filename().string();
    if (files.empty()) throw InputError("class '" + class_name + "' contains no images");
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
      return a.generic_string() < b.generic_string();
    });
    dataset.class_names.push_back(class_name);
    for (fs::path& file : files) {
      dataset.items.push_back(
          LabeledImage{std::move(file), static_cast<std::int64_t>(c), OriginalImage{}});
    }
  }
  std::sort(result.skipped.begin(), result.skipped.end());
  return result;
}

Tensor load_image(const LabeledImage& item, ImageSize target) {
  Tensor image = resize_bilinear(decode_image(item.path), target.height, target.width);
  return std::move(image).reshaped(Shape{1, target.height, target.width, 3});
}

Split stratified_split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InputError("train fraction must lie in (0, 1) so both sides are non-empty, got " +
                     std::to_string(train_fraction));
  }
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes());
  for (std::size_t i = 0; i < dataset.items.size(); ++i) {
    by_class.at(static_cast<std::size_t>(dataset.items[i].class_index)).push_back(i);
  }
  std::vector<bool> to_train(dataset.items.size(), false);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    std::vector<std::size_t>& members = by_class[c];
    const std::size_t n = members.size();
    if (n < 2) {
      throw InputError("class '" + dataset.class_names[c] + "' has " + std::to_string(n) +
                       " item(s); a split needs at least 2");
    }
    // Guard against 0.8 * n landing a hair below an integer.
    const auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(n) + 1e-9));
    if (n_train == 0 || n_train == n) {
      throw InputError("class '" + dataset.class_names[c] + "' would leave a split side empty");
    }
    Rng rng(derive_seed({seed, c, 0x73706c6974ULL}));
    for (std::size_t i = n; i > 1; --i) {
      std::swap(members[i - 1], members[rng.below(i)]);
    }
    for (std::size_t i = 0; i < n_train; ++i) to_train[members[i]] = true;
  }
  Split split;
  split.train.class_names = split.val.class_names = dataset.class_names;
  split.train.seed = split.val.seed = dataset.seed;
  for (std::size_t i = 0; i < dataset.items.size(); ++i) {
    (to_train[i] ? split.train : split.val).items.push_back(dataset.items[i]);
  }
  return split;
}

namespace {

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string manifest_header() { return "path,class,provenance,source,transform,split\n"; }

void append_manifest_rows(std::string& csv, const Dataset& dataset,
                          const std::string& split_label) {
  for (const LabeledImage& item : dataset.items) {
    std::string provenance = "original", source, transform;
    if (const auto* aug = std::get_if<AugmentedImage>(&item.provenance)) {
      provenance = "augmented";
      source = aug->source.generic_string();
      transform = to_string(aug->transform);
    }
    csv += csv_field(item.path.generic_string()) + ',' +
           csv_field(dataset.class_names.at(static_cast<std::size_t>(item.class_index))) + ',' +
           provenance + ',' + csv_field(source) + ',' + transform + ',' +
           csv_field(split_label) + '\n';
  }
}

void write_manifest_csv(const fs::path& path, const Dataset& dataset,
                        const std::string& split_label) {
  std::string csv = manifest_header();
  append_manifest_rows(csv, dataset, split_label);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write manifest " + path.string());
  out << csv;
}

}  // namespace tentnet
