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

#ifndef TENTNET_WEIGHTS_HPP_
#define TENTNET_WEIGHTS_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "tentnet/graph.hpp"
#include "tentnet/tensor.hpp"

namespace tentnet {

// Weight archive layout:
//   8 bytes   magic "TGWA0001"
//   8 bytes   header length, little-endian u64
//   header    JSON: name -> {"shape":[..], "byte_offset":o, "byte_length":l, "dtype":"f32"}
//             plus an optional "__metadata__" object
//   payload   little-endian float32 data; offsets are relative to payload start
inline constexpr char kArchiveMagic[] = "TGWA0001";

struct WeightArchive {
  std::map<std::string, Tensor> tensors;
  std::optional<InputNormalization> normalization;
};

WeightArchive read_archive(const std::filesystem::path& path);
void write_archive(const std::filesystem::path& path, const WeightArchive& archive);

void save_weights(const ModelGraph& graph, const std::filesystem::path& path);

// Requires the archive's tensor names and shapes to match the graph exactly;
// otherwise throws InputError listing up to five offenders. A normalization
// declared by the archive is installed on the graph.
void load_weights(ModelGraph& graph, const std::filesystem::path& path);

}  // namespace tentnet

#endif  // TENTNET_WEIGHTS_HPP_
