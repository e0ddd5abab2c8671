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

#include "tentnet/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "tentnet/error.hpp"

namespace fs = std::filesystem;

namespace tentnet {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "weight archives are little-endian; add byte swapping for this target");

namespace {

constexpr std::size_t kMagicSize = sizeof(kArchiveMagic) - 1;
constexpr const char* kMetadataKey = "__metadata__";

}  // namespace

WeightArchive read_archive(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open weight archive " + path.string());
  const auto file_size = static_cast<std::uint64_t>(fs::file_size(path));
  char magic[kMagicSize];
  std::uint64_t header_len = 0;
  if (!in.read(magic, kMagicSize) || std::memcmp(magic, kArchiveMagic, kMagicSize) != 0) {
    throw InputError(path.string() + " is not a weight archive (bad magic)");
  }
  if (!in.read(reinterpret_cast<char*>(&header_len), sizeof header_len) ||
      header_len > file_size - kMagicSize - sizeof header_len) {
    throw InputError(path.string() + ": truncated archive header");
  }
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  const std::uint64_t payload_start = kMagicSize + sizeof header_len + header_len;
  const std::uint64_t payload_size = file_size - payload_start;

  WeightArchive archive;
  try {
    const json header = json::parse(header_text);
    for (const auto& [name, entry] : header.items()) {
      if (name == kMetadataKey) {
        if (entry.contains("normalization")) {
          archive.normalization = InputNormalization{
              entry.at("normalization").at("mean").get<std::vector<float>>(),
              entry.at("normalization").at("std").get<std::vector<float>>()};
        }
        continue;
      }
      if (entry.at("dtype").get<std::string>() != "f32") {
        throw InputError(path.string() + ": tensor '" + name + "' has unsupported dtype " +
                         entry.at("dtype").dump());
      }
      Shape shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("byte_offset").get<std::uint64_t>();
      const auto length = entry.at("byte_length").get<std::uint64_t>();
      for (std::int64_t d : shape) {
        if (d < 0) throw InputError(path.string() + ": tensor '" + name + "' has a negative dimension");
      }
      if (length != static_cast<std::uint64_t>(num_elements(shape)) * sizeof(float)) {
        throw InputError(path.string() + ": tensor '" + name + "' byte length " +
                         std::to_string(length) + " does not match shape " + to_string(shape));
      }
      if (offset > payload_size || length > payload_size - offset) {
        throw InputError(path.string() + ": tensor '" + name + "' lies beyond the payload");
      }
      std::vector<float> values(length / sizeof(float));
      in.seekg(static_cast<std::streamoff>(payload_start + offset));
      in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(length));
      if (!in) throw InputError(path.string() + ": failed reading tensor '" + name + "'");
      archive.tensors.emplace(name, Tensor(std::move(shape), std::move(values)));
    }
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": malformed archive header: " + e.what());
  }
  return archive;
}

void write_archive(const fs::path& path, const WeightArchive& archive) {
  json header = json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : archive.tensors) {
    if (name == kMetadataKey) throw InputError("tensor name '__metadata__' is reserved");
    const std::uint64_t length = tensor.size() * sizeof(float);
    header[name] = {{"shape", tensor.shape()},
                    {"byte_offset", offset},
                    {"byte_length", length},
                    {"dtype", "f32"}};
    offset += length;
  }
  if (archive.normalization) {
    header[kMetadataKey] = {{"normalization",
                             {{"mean", archive.normalization->mean},
                              {"std", archive.normalization->std}}}};
  }
  const std::string header_text = header.dump();
  const std::uint64_t header_len = header_text.size();

  // Write to a sibling file first so a crash never leaves a torn archive.
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write weight archive " + path.string());
    out.write(kArchiveMagic, kMagicSize);
    out.write(reinterpret_cast<const char*>(&header_len), sizeof header_len);
    out.write(header_text.data(), static_cast<std::streamsize>(header_len));
    for (const auto& [name, tensor] : archive.tensors) {
      out.write(reinterpret_cast<const char*>(tensor.raw()),
                static_cast<std::streamsize>(tensor.size() * sizeof(float)));
    }
    if (!out) throw Error("failed writing weight archive " + path.string());
  }
  fs::rename(tmp, path);
}

void save_weights(const ModelGraph& graph, const fs::path& path) {
  WeightArchive archive;
  for (const Parameter& p : graph.parameters()) archive.tensors.emplace(p.name, p.value);
  archive.normalization = graph.normalization();
  write_archive(path, archive);
}

void load_weights(ModelGraph& graph, const fs::path& path) {
  WeightArchive archive = read_archive(path);
  std::vector<std::string> problems;
  std::set<std::string> expected;
  for (const Parameter& p : graph.parameters()) {
    expected.insert(p.name);
    auto it = archive.tensors.find(p.name);
    if (it == archive.tensors.end()) {
      problems.push_back("missing '" + p.name + "'");
    } else if (it->second.shape() != p.value.shape()) {
      problems.push_back("'" + p.name + "' has shape " + to_string(it->second.shape()) +
                         ", model expects " + to_string(p.value.shape()));
    }
  }
  for (const auto& [name, tensor] : archive.tensors) {
    if (!expected.contains(name)) problems.push_back("unexpected '" + name + "'");
  }
  if (!problems.empty()) {
    std::string message = path.string() + " does not match the model (" +
                          std::to_string(problems.size()) + " problem(s)): ";
    for (std::size_t i = 0; i < problems.size() && i < 5; ++i) {
      message += (i ? "; " : "") + problems[i];
    }
    throw InputError(message);
  }
  for (const auto& [name, tensor] : archive.tensors) {
    if (!tensor.all_finite()) throw InputError(path.string() + ": tensor '" + name + "' is not finite");
  }
  if (archive.normalization) graph.set_normalization(archive.normalization);
  for (Parameter& p : graph.parameters()) p.value = std::move(archive.tensors.at(p.name));
}

}  // namespace tentnet
