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

#ifndef TENTNET_TOOLS_RUN_CONFIG_HPP_
#define TENTNET_TOOLS_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tentnet/augment.hpp"
#include "tentnet/training.hpp"

namespace tentnet::cli {

enum class ValueType { kString, kInt, kUnsigned, kDouble, kBool };

struct ConfigKey {
  std::string key;
  ValueType type;
  std::string help;
};

// Every key a config file or run.json may contain.
const std::vector<ConfigKey>& config_keys();

// Flat {"dotted.key": value} object. Throws InputError on unknown keys or
// values of the wrong type.
nlohmann::json load_config_file(const std::filesystem::path& path);
void check_config(const nlohmann::json& flat);

// Parses a command-line string for `key` into a typed JSON value.
nlohmann::json parse_flag_value(const std::string& key, const std::string& text);

struct RunConfig {
  std::string model = "custom_cnn";  // custom_cnn | transfer
  std::uint64_t seed = 42;
  std::string out;

  std::string data_dir;
  std::int64_t image_size = 224;
  double train_fraction = 0.8;

  bool augment = true;
  bool split_before_augment = false;
  AugmentationSpec augmentation;

  std::string backbone_manifest;
  std::string backbone_weights;
  std::int64_t head_width = 256;

  TrainingConfig training;
  std::int64_t epochs = 20;
  std::int64_t phase1_epochs = 10;
  std::int64_t phase2_epochs = 20;
  std::string freeze_prefix = "backbone/";

  bool is_transfer() const { return model == "transfer"; }
  PhaseSchedule schedule() const;
  std::uint64_t init_seed() const;
};

// Applies model-specific defaults (batch size 64 vs 32, L2 0 vs 0.01) under
// the explicit values in `flat`, then validates.
RunConfig resolve_run_config(const nlohmann::json& flat);

// Fully concrete flat JSON; resolve_run_config(to_flat_json(c)) == c.
nlohmann::json to_flat_json(const RunConfig& config);

}  // namespace tentnet::cli

#endif  // TENTNET_TOOLS_RUN_CONFIG_HPP_
