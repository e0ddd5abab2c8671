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

#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tentnet/error.hpp"
#include "tentnet/rng.hpp"

namespace tentnet::cli {

using nlohmann::json;

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"model", ValueType::kString, "custom_cnn or transfer"},
      {"seed", ValueType::kUnsigned, "master seed for split, augmentation, init and training"},
      {"out", ValueType::kString, "run directory"},
      {"data.dir", ValueType::kString, "directory-per-class image tree"},
      {"data.image_size", ValueType::kInt, "square input resolution (custom CNN)"},
      {"data.train_fraction", ValueType::kDouble, "per-class training share"},
      {"augment.enabled", ValueType::kBool, "expand classes with synthetic images"},
      {"augment.split_before_augment", ValueType::kBool, "split originals first, augment train side only"},
      {"augment.target_per_class", ValueType::kInt, "images per class after augmentation"},
      {"augment.max_rotation_deg", ValueType::kDouble, "rotation range in degrees"},
      {"augment.hflip_prob", ValueType::kDouble, "horizontal flip probability"},
      {"augment.brightness_min", ValueType::kDouble, "lowest brightness factor"},
      {"augment.brightness_max", ValueType::kDouble, "highest brightness factor"},
      {"augment.zoom_min", ValueType::kDouble, "smallest crop scale"},
      {"augment.zoom_max", ValueType::kDouble, "largest crop scale"},
      {"backbone.manifest", ValueType::kString, "backbone manifest (transfer)"},
      {"backbone.weights", ValueType::kString, "backbone weight archive (transfer)"},
      {"model.head_width", ValueType::kInt, "hidden units of the transfer head"},
      {"train.learning_rate", ValueType::kDouble, "Adam learning rate"},
      {"train.beta1", ValueType::kDouble, "Adam beta1"},
      {"train.beta2", ValueType::kDouble, "Adam beta2"},
      {"train.epsilon", ValueType::kDouble, "Adam epsilon"},
      {"train.batch_size", ValueType::kInt, "batch size (default 64 custom, 32 transfer)"},
      {"train.l2_lambda", ValueType::kDouble, "L2 weight (default 0 custom, 0.01 transfer)"},
      {"train.dropout_rate", ValueType::kDouble, "dropout rate of the classifier"},
      {"schedule.epochs", ValueType::kInt, "epochs of the custom CNN"},
      {"schedule.phase1_epochs", ValueType::kInt, "frozen-backbone epochs (transfer)"},
      {"schedule.phase2_epochs", ValueType::kInt, "fine-tuning epochs (transfer)"},
      {"schedule.freeze_prefix", ValueType::kString, "parameter prefix frozen in phase 1"},
  };
  return keys;
}

namespace {

const ConfigKey& find_key(const std::string& key) {
  for (const ConfigKey& k : config_keys()) {
    if (k.key == key) return k;
  }
  throw InputError("unknown config key '" + key + "'");
}

bool type_matches(const json& value, ValueType type) {
  switch (type) {
    case ValueType::kString: return value.is_string();
    case ValueType::kInt: return value.is_number_integer();
    case ValueType::kUnsigned: return value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0);
    case ValueType::kDouble: return value.is_number();
    case ValueType::kBool: return value.is_boolean();
  }
  return false;
}

template <typename T>
T get_or(const json& flat, const char* key, T fallback) {
  return flat.contains(key) ? flat.at(key).get<T>() : fallback;
}

}  // namespace

void check_config(const json& flat) {
  if (!flat.is_object()) throw InputError("config must be a JSON object of dotted keys");
  for (const auto& [key, value] : flat.items()) {
    const ConfigKey& k = find_key(key);
    if (!type_matches(value, k.type)) {
      throw InputError("config key '" + key + "' has the wrong type: " + value.dump());
    }
  }
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  json flat;
  try {
    flat = json::parse(text.str());
  } catch (const json::exception& e) {
    throw InputError(path.string() + " is not valid JSON: " + e.what());
  }
  check_config(flat);
  return flat;
}

json parse_flag_value(const std::string& key, const std::string& text) {
  const ConfigKey& k = find_key(key);
  auto bad = [&]() { return InputError("invalid value '" + text + "' for " + key); };
  const char* first = text.data();
  const char* last = text.data() + text.size();
  switch (k.type) {
    case ValueType::kString: return text;
    case ValueType::kBool:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw bad();
    case ValueType::kInt: {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last) throw bad();
      return v;
    }
    case ValueType::kUnsigned: {
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last) throw bad();
      return v;
    }
    case ValueType::kDouble: {
      double v = 0.0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last) throw bad();
      return v;
    }
  }
  throw bad();
}

PhaseSchedule RunConfig::schedule() const {
  if (is_transfer()) return PhaseSchedule::two_phase(phase1_epochs, phase2_epochs, freeze_prefix);
  return PhaseSchedule::single(epochs);
}

std::uint64_t RunConfig::init_seed() const { return derive_seed({seed, fnv1a("init")}); }

RunConfig resolve_run_config(const json& flat) {
  check_config(flat);
  RunConfig c;
  c.model = get_or<std::string>(flat, "model", c.model);
  if (c.model != "custom_cnn" && c.model != "transfer") {
    throw InputError("model must be custom_cnn or transfer, got '" + c.model + "'");
  }
  c.seed = get_or<std::uint64_t>(flat, "seed", c.seed);
  c.out = get_or<std::string>(flat, "out", c.out);
  c.data_dir = get_or<std::string>(flat, "data.dir", c.data_dir);
  c.image_size = get_or<std::int64_t>(flat, "data.image_size", c.image_size);
  c.train_fraction = get_or<double>(flat, "data.train_fraction", c.train_fraction);

  c.augment = get_or<bool>(flat, "augment.enabled", c.augment);
  c.split_before_augment = get_or<bool>(flat, "augment.split_before_augment", c.split_before_augment);
  AugmentationSpec& a = c.augmentation;
  a.target_per_class = static_cast<std::size_t>(
      get_or<std::int64_t>(flat, "augment.target_per_class", static_cast<std::int64_t>(a.target_per_class)));
  a.max_rotation_deg = static_cast<float>(get_or<double>(flat, "augment.max_rotation_deg", a.max_rotation_deg));
  a.hflip_prob = static_cast<float>(get_or<double>(flat, "augment.hflip_prob", a.hflip_prob));
  a.brightness_min = static_cast<float>(get_or<double>(flat, "augment.brightness_min", a.brightness_min));
  a.brightness_max = static_cast<float>(get_or<double>(flat, "augment.brightness_max", a.brightness_max));
  a.zoom_min = static_cast<float>(get_or<double>(flat, "augment.zoom_min", a.zoom_min));
  a.zoom_max = static_cast<float>(get_or<double>(flat, "augment.zoom_max", a.zoom_max));
  a.seed = c.seed;

  c.backbone_manifest = get_or<std::string>(flat, "backbone.manifest", c.backbone_manifest);
  c.backbone_weights = get_or<std::string>(flat, "backbone.weights", c.backbone_weights);
  c.head_width = get_or<std::int64_t>(flat, "model.head_width", c.head_width);

  TrainingConfig& t = c.training;
  t.learning_rate = get_or<double>(flat, "train.learning_rate", t.learning_rate);
  t.beta1 = get_or<double>(flat, "train.beta1", t.beta1);
  t.beta2 = get_or<double>(flat, "train.beta2", t.beta2);
  t.epsilon = get_or<double>(flat, "train.epsilon", t.epsilon);
  t.batch_size = get_or<std::int64_t>(flat, "train.batch_size", c.is_transfer() ? 32 : 64);
  t.l2_lambda = get_or<double>(flat, "train.l2_lambda", c.is_transfer() ? 0.01 : 0.0);
  t.dropout_rate = get_or<double>(flat, "train.dropout_rate", t.dropout_rate);
  t.seed = derive_seed({c.seed, fnv1a("train")});

  c.epochs = get_or<std::int64_t>(flat, "schedule.epochs", c.epochs);
  c.phase1_epochs = get_or<std::int64_t>(flat, "schedule.phase1_epochs", c.phase1_epochs);
  c.phase2_epochs = get_or<std::int64_t>(flat, "schedule.phase2_epochs", c.phase2_epochs);
  c.freeze_prefix = get_or<std::string>(flat, "schedule.freeze_prefix", c.freeze_prefix);

  if (c.data_dir.empty()) throw InputError("no dataset given (--data or data.dir)");
  if (c.is_transfer() && c.backbone_manifest.empty()) {
    throw InputError("transfer model needs a backbone manifest (--backbone-manifest)");
  }
  if (c.image_size < 8) throw InputError("image size must be at least 8");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
    throw InputError("train fraction must lie in (0, 1)");
  }
  if (c.head_width < 1) throw InputError("head width must be positive");
  if (c.epochs < 0 || c.phase1_epochs < 0 || c.phase2_epochs < 0) {
    throw InputError("epoch counts must be non-negative");
  }
  if (c.schedule().total_epochs() <= 0) throw InputError("schedule has zero epochs");
  a.validate();
  t.validate();
  return c;
}

json to_flat_json(const RunConfig& c) {
  json flat;
  flat["model"] = c.model;
  flat["seed"] = c.seed;
  flat["out"] = c.out;
  flat["data.dir"] = c.data_dir;
  flat["data.image_size"] = c.image_size;
  flat["data.train_fraction"] = c.train_fraction;
  flat["augment.enabled"] = c.augment;
  flat["augment.split_before_augment"] = c.split_before_augment;
  flat["augment.target_per_class"] = static_cast<std::int64_t>(c.augmentation.target_per_class);
  flat["augment.max_rotation_deg"] = c.augmentation.max_rotation_deg;
  flat["augment.hflip_prob"] = c.augmentation.hflip_prob;
  flat["augment.brightness_min"] = c.augmentation.brightness_min;
  flat["augment.brightness_max"] = c.augmentation.brightness_max;
  flat["augment.zoom_min"] = c.augmentation.zoom_min;
  flat["augment.zoom_max"] = c.augmentation.zoom_max;
  flat["backbone.manifest"] = c.backbone_manifest;
  flat["backbone.weights"] = c.backbone_weights;
  flat["model.head_width"] = c.head_width;
  flat["train.learning_rate"] = c.training.learning_rate;
  flat["train.beta1"] = c.training.beta1;
  flat["train.beta2"] = c.training.beta2;
  flat["train.epsilon"] = c.training.epsilon;
  flat["train.batch_size"] = c.training.batch_size;
  flat["train.l2_lambda"] = c.training.l2_lambda;
  flat["train.dropout_rate"] = c.training.dropout_rate;
  flat["schedule.epochs"] = c.epochs;
  flat["schedule.phase1_epochs"] = c.phase1_epochs;
  flat["schedule.phase2_epochs"] = c.phase2_epochs;
  flat["schedule.freeze_prefix"] = c.freeze_prefix;
  return flat;
}

}  // namespace tentnet::cli
