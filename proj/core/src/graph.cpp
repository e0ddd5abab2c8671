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

#include "tentnet/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tentnet/error.hpp"
#include "tentnet/rng.hpp"

namespace tentnet {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 12> kKindNames = {
    "input",   "conv2d",          "depthwise_conv2d", "maxpool2d", "dense", "activation",
    "global_avg_pool", "dropout", "batchnorm",       "add",       "multiply", "flatten"};

std::string_view role_suffix(ParamRole role) {
  switch (role) {
    case ParamRole::kKernel: return "kernel";
    case ParamRole::kDepthwiseKernel: return "depthwise_kernel";
    case ParamRole::kBias: return "bias";
    case ParamRole::kGamma: return "gamma";
    case ParamRole::kBeta: return "beta";
    case ParamRole::kMovingMean: return "moving_mean";
    case ParamRole::kMovingVariance: return "moving_variance";
  }
  return "unknown";
}

std::string param_name(const std::string& layer, ParamRole role) {
  return layer + "/" + std::string(role_suffix(role));
}

std::size_t expected_inputs(LayerKind kind) {
  switch (kind) {
    case LayerKind::kInput: return 0;
    case LayerKind::kAdd:
    case LayerKind::kMultiply: return 2;
    default: return 1;
  }
}

[[noreturn]] void layer_error(const LayerSpec& layer, const std::string& message) {
  throw ShapeError("layer '" + layer.name + "' (" + std::string(to_string(layer.kind())) +
                   "): " + message);
}

struct ParamSlot {
  ParamRole role;
  Shape shape;
};

// Output shape and parameter slots of a layer given its input shapes.
std::pair<Shape, std::vector<ParamSlot>> infer_layer(const LayerSpec& layer,
                                                     const std::vector<Shape>& in) {
  auto need_rank = [&](const Shape& s, std::size_t rank) {
    if (s.size() != rank) {
      layer_error(layer, "expects a rank-" + std::to_string(rank) + " input, got " +
                             to_string(s));
    }
  };
  auto positive = [&](std::int64_t v, const char* what) {
    if (v < 1) layer_error(layer, std::string(what) + " must be positive");
  };
  return std::visit(
      [&](const auto& p) -> std::pair<Shape, std::vector<ParamSlot>> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, InputParams>) {
          positive(p.height, "height");
          positive(p.width, "width");
          positive(p.channels, "channels");
          return {Shape{p.height, p.width, p.channels}, {}};
        } else if constexpr (std::is_same_v<P, Conv2dParams>) {
          need_rank(in[0], 3);
          positive(p.filters, "filters");
          positive(p.kernel, "kernel");
          positive(p.stride, "stride");
          if (p.padding == Padding::kValid && (p.kernel > in[0][0] || p.kernel > in[0][1])) {
            layer_error(layer, "kernel " + std::to_string(p.kernel) + " larger than input " +
                                   to_string(in[0]));
          }
          std::vector<ParamSlot> slots{{ParamRole::kKernel, {p.kernel, p.kernel, in[0][2], p.filters}}};
          if (p.use_bias) slots.push_back({ParamRole::kBias, {p.filters}});
          return {Shape{conv_output_size(in[0][0], p.kernel, p.stride, p.padding),
                        conv_output_size(in[0][1], p.kernel, p.stride, p.padding), p.filters},
                  slots};
        } else if constexpr (std::is_same_v<P, DepthwiseConv2dParams>) {
          need_rank(in[0], 3);
          positive(p.kernel, "kernel");
          positive(p.stride, "stride");
          if (p.padding == Padding::kValid && (p.kernel > in[0][0] || p.kernel > in[0][1])) {
            layer_error(layer, "kernel " + std::to_string(p.kernel) + " larger than input " +
                                   to_string(in[0]));
          }
          std::vector<ParamSlot> slots{
              {ParamRole::kDepthwiseKernel, {p.kernel, p.kernel, in[0][2], 1}}};
          if (p.use_bias) slots.push_back({ParamRole::kBias, {in[0][2]}});
          return {Shape{conv_output_size(in[0][0], p.kernel, p.stride, p.padding),
                        conv_output_size(in[0][1], p.kernel, p.stride, p.padding), in[0][2]},
                  slots};
        } else if constexpr (std::is_same_v<P, MaxPool2dParams>) {
          need_rank(in[0], 3);
          positive(p.window, "window");
          positive(p.stride, "stride");
          if (p.window > in[0][0] || p.window > in[0][1]) {
            layer_error(layer, "window " + std::to_string(p.window) + " larger than input " +
                                   to_string(in[0]));
          }
          return {Shape{(in[0][0] - p.window) / p.stride + 1,
                        (in[0][1] - p.window) / p.stride + 1, in[0][2]},
                  {}};
        } else if constexpr (std::is_same_v<P, DenseParams>) {
          // Inputs of higher rank are flattened first.
          positive(p.units, "units");
          std::vector<ParamSlot> slots{{ParamRole::kKernel, {num_elements(in[0]), p.units}}};
          if (p.use_bias) slots.push_back({ParamRole::kBias, {p.units}});
          return {Shape{p.units}, slots};
        } else if constexpr (std::is_same_v<P, ActivationParams>) {
          return {in[0], {}};
        } else if constexpr (std::is_same_v<P, GlobalAvgPoolParams>) {
          need_rank(in[0], 3);
          return {Shape{in[0][2]}, {}};
        } else if constexpr (std::is_same_v<P, DropoutParams>) {
          if (!(p.rate >= 0.0 && p.rate < 1.0)) layer_error(layer, "rate must lie in [0, 1)");
          return {in[0], {}};
        } else if constexpr (std::is_same_v<P, BatchNormParams>) {
          if (!(p.eps >= 0.0)) layer_error(layer, "eps must be non-negative");
          const std::int64_t c = in[0].back();
          return {in[0],
                  {{ParamRole::kGamma, {c}},
                   {ParamRole::kBeta, {c}},
                   {ParamRole::kMovingMean, {c}},
                   {ParamRole::kMovingVariance, {c}}}};
        } else if constexpr (std::is_same_v<P, AddParams>) {
          if (in[0] != in[1]) {
            layer_error(layer, "input shapes " + to_string(in[0]) + " and " + to_string(in[1]) +
                                   " differ");
          }
          return {in[0], {}};
        } else if constexpr (std::is_same_v<P, MultiplyParams>) {
          const bool broadcast = in[0].size() == 3 && in[1].size() == 1 && in[1][0] == in[0][2];
          if (in[0] != in[1] && !broadcast) {
            layer_error(layer, "input shapes " + to_string(in[0]) + " and " + to_string(in[1]) +
                                   " are not compatible");
          }
          return {in[0], {}};
        } else {
          static_assert(std::is_same_v<P, FlattenParams>);
          return {Shape{num_elements(in[0])}, {}};
        }
      },
      layer.params);
}

// Kahn's algorithm, preferring manifest order among ready layers.
std::vector<LayerSpec> topological_sort(std::vector<LayerSpec> layers) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].name.empty()) throw InputError("layer " + std::to_string(i) + " has no name");
    if (!index.emplace(layers[i].name, i).second) {
      throw InputError("duplicate layer name '" + layers[i].name + "'");
    }
  }
  std::vector<std::vector<std::size_t>> consumers(layers.size());
  std::vector<std::size_t> pending(layers.size(), 0);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& layer = layers[i];
    if (layer.inputs.size() != expected_inputs(layer.kind())) {
      throw InputError("layer '" + layer.name + "' (" + std::string(to_string(layer.kind())) +
                       ") takes " + std::to_string(expected_inputs(layer.kind())) +
                       " input(s), got " + std::to_string(layer.inputs.size()));
    }
    for (const std::string& in : layer.inputs) {
      auto it = index.find(in);
      if (it == index.end()) {
        throw InputError("layer '" + layer.name + "' refers to unknown input '" + in + "'");
      }
      consumers[it->second].push_back(i);
      ++pending[i];
    }
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (pending[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t i = ready.top();
    ready.pop();
    order.push_back(i);
    for (std::size_t consumer : consumers[i]) {
      if (--pending[consumer] == 0) ready.push(consumer);
    }
  }
  if (order.size() != layers.size()) {
    // Walk upstream through unresolved layers until a layer repeats.
    std::size_t start = 0;
    while (pending[start] == 0) ++start;
    std::vector<std::size_t> path;
    std::map<std::size_t, std::size_t> seen;
    std::size_t cur = start;
    while (!seen.contains(cur)) {
      seen[cur] = path.size();
      path.push_back(cur);
      for (const std::string& in : layers[cur].inputs) {
        const std::size_t j = index.at(in);
        if (pending[j] != 0) {
          cur = j;
          break;
        }
      }
    }
    std::string cycle;
    for (std::size_t k = path.size(); k-- > seen[cur];) cycle += layers[path[k]].name + " -> ";
    cycle += layers[cur].name;
    throw InputError("cycle in layer graph: " + cycle);
  }
  std::vector<LayerSpec> sorted;
  sorted.reserve(layers.size());
  for (std::size_t i : order) sorted.push_back(std::move(layers[i]));
  return sorted;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  return kKindNames.at(static_cast<std::size_t>(kind));
}

LayerKind parse_layer_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<LayerKind>(i);
  }
  throw InputError("unknown layer kind '" + std::string(text) + "'");
}

ModelGraph ModelGraph::from_layers(std::vector<LayerSpec> layers,
                                   std::vector<std::string> class_names,
                                   std::optional<InputNormalization> normalization) {
  if (layers.empty()) throw InputError("model has no layers");
  ModelGraph graph;
  graph.layers_ = topological_sort(std::move(layers));
  std::size_t input_count = 0;
  for (const LayerSpec& layer : graph.layers_) {
    if (layer.kind() == LayerKind::kInput) ++input_count;
  }
  if (input_count != 1 || graph.layers_.front().kind() != LayerKind::kInput) {
    throw InputError("model needs exactly one input layer, found " + std::to_string(input_count));
  }

  std::map<std::string, std::size_t> position;
  for (const LayerSpec& layer : graph.layers_) {
    std::vector<Shape> in;
    for (const std::string& name : layer.inputs) in.push_back(graph.shapes_[position.at(name)]);
    auto [shape, slots] = infer_layer(layer, in);
    position[layer.name] = graph.shapes_.size();
    graph.shapes_.push_back(std::move(shape));
    for (ParamSlot& slot : slots) {
      Parameter p;
      p.name = param_name(layer.name, slot.role);
      p.value = Tensor(std::move(slot.shape));
      p.role = slot.role;
      p.trainable = !p.is_statistic();
      graph.parameters_.push_back(std::move(p));
    }
  }
  std::set<std::string> names;
  for (const Parameter& p : graph.parameters_) {
    if (!names.insert(p.name).second) {
      throw InputError("duplicate parameter name '" + p.name + "'");
    }
  }

  graph.class_names_ = std::move(class_names);
  if (!graph.class_names_.empty()) {
    std::set<std::string> unique(graph.class_names_.begin(), graph.class_names_.end());
    if (unique.size() != graph.class_names_.size()) throw InputError("duplicate class names");
    const LayerSpec& last = graph.layers_.back();
    const auto* act = std::get_if<ActivationParams>(&last.params);
    if (act == nullptr || act->function != Activation::kSoftmax) {
      throw InputError("classifier must end in a softmax activation, last layer is '" +
                       last.name + "'");
    }
    const Shape expected{static_cast<std::int64_t>(graph.class_names_.size())};
    if (graph.output_shape() != expected) {
      throw InputError("classifier output " + to_string(graph.output_shape()) + " does not match " +
                       std::to_string(graph.class_names_.size()) + " classes");
    }
  }
  graph.set_normalization(std::move(normalization));
  return graph;
}

void ModelGraph::set_normalization(std::optional<InputNormalization> normalization) {
  if (normalization) {
    const auto channels = static_cast<std::size_t>(std::get<InputParams>(layers_.front().params).channels);
    if (normalization->mean.size() != channels || normalization->std.size() != channels) {
      throw InputError("normalization needs " + std::to_string(channels) + " channel values");
    }
    for (float s : normalization->std) {
      if (!(s > 0.0f)) throw InputError("normalization std must be positive");
    }
  }
  normalization_ = std::move(normalization);
}

Parameter* ModelGraph::find_parameter(std::string_view name) {
  for (Parameter& p : parameters_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Parameter* ModelGraph::find_parameter(std::string_view name) const {
  for (const Parameter& p : parameters_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Shape& ModelGraph::layer_shape(std::string_view layer) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].name == layer) return shapes_[i];
  }
  throw InputError("no layer named '" + std::string(layer) + "'");
}

ImageSize ModelGraph::input_size() const {
  const auto& in = std::get<InputParams>(layers_.front().params);
  return ImageSize{in.height, in.width};
}

std::int64_t ModelGraph::parameter_count() const {
  std::int64_t total = 0;
  for (const Parameter& p : parameters_) total += static_cast<std::int64_t>(p.value.size());
  return total;
}

std::size_t ModelGraph::count_matching(std::string_view prefix) const {
  return static_cast<std::size_t>(std::count_if(
      parameters_.begin(), parameters_.end(), [prefix](const Parameter& p) {
        return !p.is_statistic() && p.name.starts_with(prefix);
      }));
}

std::size_t ModelGraph::set_trainable(std::string_view prefix, bool flag) {
  if (count_matching(prefix) == 0) {
    throw InputError("no trainable parameter matches prefix '" + std::string(prefix) + "'");
  }
  std::size_t changed = 0;
  for (Parameter& p : parameters_) {
    if (p.is_statistic() || !p.name.starts_with(prefix)) continue;
    if (p.trainable != flag) ++changed;
    p.trainable = flag;
  }
  return changed;
}

std::vector<std::string> ModelGraph::trainable_parameter_names() const {
  std::vector<std::string> names;
  for (const Parameter& p : parameters_) {
    if (p.trainable) names.push_back(p.name);
  }
  return names;
}

std::uint64_t ModelGraph::parameter_hash(std::string_view prefix) const {
  std::uint64_t h = fnv1a("params");
  for (const Parameter& p : parameters_) {
    if (!p.name.starts_with(prefix)) continue;
    h = mix64(h ^ fnv1a(p.name));
    h = mix64(h ^ hash_tensor(p.value));
  }
  return h;
}

bool ModelGraph::same_structure(const ModelGraph& other) const {
  return layers_ == other.layers_ && class_names_ == other.class_names_ &&
         normalization_ == other.normalization_;
}

// ---------------------------------------------------------------------------
// Manifest serialization

namespace {

template <typename T>
T take(json& params, const char* key, T fallback) {
  if (!params.contains(key)) return fallback;
  T value = params.at(key).get<T>();
  params.erase(key);
  return value;
}

template <typename T>
T require_key(json& params, const char* key, const std::string& layer) {
  if (!params.contains(key)) {
    throw InputError("layer '" + layer + "' is missing parameter '" + key + "'");
  }
  return take<T>(params, key, T{});
}

LayerParams params_from_json(LayerKind kind, json params, const std::string& layer) {
  LayerParams out;
  switch (kind) {
    case LayerKind::kInput:
      out = InputParams{require_key<std::int64_t>(params, "height", layer),
                        require_key<std::int64_t>(params, "width", layer),
                        take<std::int64_t>(params, "channels", 3)};
      break;
    case LayerKind::kConv2d:
      out = Conv2dParams{require_key<std::int64_t>(params, "filters", layer),
                         require_key<std::int64_t>(params, "kernel", layer),
                         take<std::int64_t>(params, "stride", 1),
                         parse_padding(take<std::string>(params, "padding", "same")),
                         take<bool>(params, "use_bias", true)};
      break;
    case LayerKind::kDepthwiseConv2d:
      out = DepthwiseConv2dParams{require_key<std::int64_t>(params, "kernel", layer),
                                  take<std::int64_t>(params, "stride", 1),
                                  parse_padding(take<std::string>(params, "padding", "same")),
                                  take<bool>(params, "use_bias", false)};
      break;
    case LayerKind::kMaxPool2d: {
      const auto window = take<std::int64_t>(params, "window", 2);
      out = MaxPool2dParams{window, take<std::int64_t>(params, "stride", window)};
      break;
    }
    case LayerKind::kDense:
      out = DenseParams{require_key<std::int64_t>(params, "units", layer),
                        take<bool>(params, "use_bias", true)};
      break;
    case LayerKind::kActivation:
      out = ActivationParams{parse_activation(require_key<std::string>(params, "function", layer))};
      break;
    case LayerKind::kGlobalAvgPool: out = GlobalAvgPoolParams{}; break;
    case LayerKind::kDropout: out = DropoutParams{require_key<double>(params, "rate", layer)}; break;
    case LayerKind::kBatchNorm: out = BatchNormParams{take<double>(params, "eps", 1e-3)}; break;
    case LayerKind::kAdd: out = AddParams{}; break;
    case LayerKind::kMultiply: out = MultiplyParams{}; break;
    case LayerKind::kFlatten: out = FlattenParams{}; break;
  }
  if (!params.empty()) {
    throw InputError("layer '" + layer + "' has unknown parameter '" + params.begin().key() + "'");
  }
  return out;
}

json params_to_json(const LayerParams& params) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, InputParams>) {
          return {{"height", p.height}, {"width", p.width}, {"channels", p.channels}};
        } else if constexpr (std::is_same_v<P, Conv2dParams>) {
          return {{"filters", p.filters}, {"kernel", p.kernel}, {"stride", p.stride},
                  {"padding", to_string(p.padding)}, {"use_bias", p.use_bias}};
        } else if constexpr (std::is_same_v<P, DepthwiseConv2dParams>) {
          return {{"kernel", p.kernel}, {"stride", p.stride},
                  {"padding", to_string(p.padding)}, {"use_bias", p.use_bias}};
        } else if constexpr (std::is_same_v<P, MaxPool2dParams>) {
          return {{"window", p.window}, {"stride", p.stride}};
        } else if constexpr (std::is_same_v<P, DenseParams>) {
          return {{"units", p.units}, {"use_bias", p.use_bias}};
        } else if constexpr (std::is_same_v<P, ActivationParams>) {
          return {{"function", to_string(p.function)}};
        } else if constexpr (std::is_same_v<P, DropoutParams>) {
          return {{"rate", p.rate}};
        } else if constexpr (std::is_same_v<P, BatchNormParams>) {
          return {{"eps", p.eps}};
        } else {
          return json::object();
        }
      },
      params);
}

}  // namespace

ModelGraph parse_manifest(std::string_view manifest_text) {
  json doc;
  try {
    doc = json::parse(manifest_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("layers") || !doc.at("layers").is_array()) {
      throw InputError("manifest needs a \"layers\" array");
    }
    std::vector<std::string> class_names;
    if (doc.contains("class_names")) class_names = doc.at("class_names").get<std::vector<std::string>>();
    std::vector<LayerSpec> layers;
    for (const json& entry : doc.at("layers")) {
      LayerSpec layer;
      layer.name = entry.at("name").get<std::string>();
      const LayerKind kind = parse_layer_kind(entry.at("kind").get<std::string>());
      layer.params = params_from_json(kind, entry.value("params", json::object()), layer.name);
      if (entry.contains("inputs")) layer.inputs = entry.at("inputs").get<std::vector<std::string>>();
      layers.push_back(std::move(layer));
    }
    std::optional<InputNormalization> normalization;
    if (doc.contains("normalization") && !doc.at("normalization").is_null()) {
      normalization = InputNormalization{
          doc.at("normalization").at("mean").get<std::vector<float>>(),
          doc.at("normalization").at("std").get<std::vector<float>>()};
    }
    return ModelGraph::from_layers(std::move(layers), std::move(class_names),
                                   std::move(normalization));
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed manifest: ") + e.what());
  }
}

std::string to_manifest(const ModelGraph& graph) {
  json doc;
  doc["class_names"] = graph.class_names();
  json layers = json::array();
  for (const LayerSpec& layer : graph.layers()) {
    layers.push_back({{"name", layer.name},
                      {"kind", to_string(layer.kind())},
                      {"params", params_to_json(layer.params)},
                      {"inputs", layer.inputs}});
  }
  doc["layers"] = std::move(layers);
  if (graph.normalization()) {
    doc["normalization"] = {{"mean", graph.normalization()->mean},
                            {"std", graph.normalization()->std}};
  }
  return doc.dump(2) + "\n";
}

ModelGraph load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open manifest " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_manifest(text.str());
}

void save_manifest(const ModelGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write manifest " + path.string());
  out << to_manifest(graph);
}

// ---------------------------------------------------------------------------
// Initialization and execution

void init_weights(ModelGraph& graph, std::uint64_t seed, std::string_view prefix) {
  // Dense layers read directly by a softmax start at zero, so a fresh
  // classifier predicts the uniform distribution.
  std::set<std::string> zero_kernels;
  for (const LayerSpec& layer : graph.layers()) {
    const auto* act = std::get_if<ActivationParams>(&layer.params);
    if (act == nullptr || act->function != Activation::kSoftmax) continue;
    for (const LayerSpec& src : graph.layers()) {
      if (src.name == layer.inputs.at(0) && src.kind() == LayerKind::kDense) {
        zero_kernels.insert(param_name(src.name, ParamRole::kKernel));
      }
    }
  }
  for (Parameter& p : graph.parameters()) {
    if (!p.name.starts_with(prefix)) continue;
    if (zero_kernels.contains(p.name)) {
      p.value = Tensor(p.value.shape(), 0.0f);
      continue;
    }
    switch (p.role) {
      case ParamRole::kKernel:
      case ParamRole::kDepthwiseKernel: {
        const Shape& s = p.value.shape();
        // Conv kernels (kh,kw,cin,cout): kh*kw*cin. Depthwise (kh,kw,c,1): kh*kw.
        // Dense (din,dout): din.
        std::int64_t fan_in = 1;
        if (p.role == ParamRole::kDepthwiseKernel) {
          fan_in = s[0] * s[1];
        } else {
          for (std::size_t i = 0; i + 1 < s.size(); ++i) fan_in *= s[i];
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        Rng rng(derive_seed({seed, fnv1a(p.name)}));
        for (float& v : p.value.data()) v = static_cast<float>(rng.uniform(-bound, bound));
        break;
      }
      case ParamRole::kGamma:
      case ParamRole::kMovingVariance:
        p.value = Tensor(p.value.shape(), 1.0f);
        break;
      case ParamRole::kBias:
      case ParamRole::kBeta:
      case ParamRole::kMovingMean:
        p.value = Tensor(p.value.shape(), 0.0f);
        break;
    }
  }
}

ForwardResult forward(const ModelGraph& graph, const Tensor& batch, bool training,
                      std::uint64_t seed) {
  const auto& in = std::get<InputParams>(graph.input_layer().params);
  if (batch.rank() != 4 || batch.dim(1) != in.height || batch.dim(2) != in.width ||
      batch.dim(3) != in.channels) {
    throw ShapeError("layer '" + graph.input_layer().name + "': batch " +
                     to_string(batch.shape()) + " does not match input (n," +
                     std::to_string(in.height) + "," + std::to_string(in.width) + "," +
                     std::to_string(in.channels) + ")");
  }
  ForwardResult result;
  Tape& tape = result.tape;
  std::map<std::string_view, Var> params;
  for (const Parameter& p : graph.parameters()) {
    const Var v = tape.leaf(p.value, p.trainable && !p.is_statistic());
    result.parameter_vars.push_back(v);
    params.emplace(p.name, v);
  }
  auto param = [&](const LayerSpec& layer, ParamRole role) {
    auto it = params.find(param_name(layer.name, role));
    return it == params.end() ? kNoBias : it->second;
  };

  Tensor input = batch;
  if (graph.normalization()) {
    const InputNormalization& norm = *graph.normalization();
    const std::size_t c = norm.mean.size();
    for (std::size_t i = 0; i < input.size(); ++i) {
      input[i] = (input[i] - norm.mean[i % c]) / norm.std[i % c];
    }
  }

  std::map<std::string_view, Var> outputs;
  std::uint64_t dropout_calls = 0;
  Var last{};
  for (const LayerSpec& layer : graph.layers()) {
    auto arg = [&](std::size_t i) { return outputs.at(layer.inputs.at(i)); };
    try {
      last = std::visit(
          [&](const auto& p) -> Var {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, InputParams>) {
              return tape.constant(input);
            } else if constexpr (std::is_same_v<P, Conv2dParams>) {
              return conv2d(tape, arg(0), param(layer, ParamRole::kKernel),
                            param(layer, ParamRole::kBias), p.stride, p.padding);
            } else if constexpr (std::is_same_v<P, DepthwiseConv2dParams>) {
              return depthwise_conv2d(tape, arg(0), param(layer, ParamRole::kDepthwiseKernel),
                                      param(layer, ParamRole::kBias), p.stride, p.padding);
            } else if constexpr (std::is_same_v<P, MaxPool2dParams>) {
              return maxpool2d(tape, arg(0), p.window, p.stride);
            } else if constexpr (std::is_same_v<P, DenseParams>) {
              Var x = arg(0);
              if (tape.value(x).rank() > 2) x = flatten(tape, x);
              return dense(tape, x, param(layer, ParamRole::kKernel),
                           param(layer, ParamRole::kBias));
            } else if constexpr (std::is_same_v<P, ActivationParams>) {
              return activation(tape, p.function, arg(0));
            } else if constexpr (std::is_same_v<P, GlobalAvgPoolParams>) {
              return global_avg_pool(tape, arg(0));
            } else if constexpr (std::is_same_v<P, DropoutParams>) {
              return dropout(tape, arg(0), p.rate, seed, dropout_calls++, training);
            } else if constexpr (std::is_same_v<P, BatchNormParams>) {
              return batchnorm_inference(tape, arg(0), param(layer, ParamRole::kMovingMean),
                                         param(layer, ParamRole::kMovingVariance),
                                         param(layer, ParamRole::kGamma),
                                         param(layer, ParamRole::kBeta), p.eps);
            } else if constexpr (std::is_same_v<P, AddParams>) {
              return add(tape, arg(0), arg(1));
            } else if constexpr (std::is_same_v<P, MultiplyParams>) {
              return multiply(tape, arg(0), arg(1));
            } else {
              return flatten(tape, arg(0));
            }
          },
          layer.params);
    } catch (const NumericError& e) {
      throw NumericError("layer '" + layer.name + "': " + e.what());
    } catch (const ShapeError& e) {
      throw ShapeError("layer '" + layer.name + "': " + e.what());
    }
    outputs[layer.name] = last;
  }
  result.output = last;
  return result;
}

Tensor predict(const ModelGraph& graph, const Tensor& batch) {
  ForwardResult result = forward(graph, batch, false, 0);
  return result.tape.value(result.output);
}

ModelGraph build_custom_cnn(ImageSize input, std::vector<std::string> class_names,
                            double dropout_rate) {
  if (class_names.size() < 2) throw InputError("custom CNN needs at least 2 classes");
  std::vector<LayerSpec> layers;
  layers.push_back({"input", InputParams{input.height, input.width, 3}, {}});
  std::string prev = "input";
  const std::array<std::int64_t, 3> filters = {32, 64, 128};
  for (std::size_t b = 0; b < filters.size(); ++b) {
    const std::string idx = std::to_string(b + 1);
    layers.push_back({"conv" + idx, Conv2dParams{filters[b], 3, 1, Padding::kSame, true}, {prev}});
    layers.push_back({"relu" + idx, ActivationParams{Activation::kRelu}, {"conv" + idx}});
    layers.push_back({"pool" + idx, MaxPool2dParams{2, 2}, {"relu" + idx}});
    prev = "pool" + idx;
  }
  layers.push_back({"flatten", FlattenParams{}, {prev}});
  layers.push_back({"dense1", DenseParams{128, true}, {"flatten"}});
  layers.push_back({"relu4", ActivationParams{Activation::kRelu}, {"dense1"}});
  layers.push_back({"dropout", DropoutParams{dropout_rate}, {"relu4"}});
  layers.push_back({"logits", DenseParams{static_cast<std::int64_t>(class_names.size()), true},
                    {"dropout"}});
  layers.push_back({"softmax", ActivationParams{Activation::kSoftmax}, {"logits"}});
  return ModelGraph::from_layers(std::move(layers), std::move(class_names));
}

ModelGraph build_transfer_model(const ModelGraph& backbone,
                                std::vector<std::string> class_names,
                                std::int64_t head_width, double dropout_rate,
                                std::uint64_t seed) {
  if (head_width < 1) throw InputError("transfer head width must be positive");
  if (class_names.size() < 2) throw InputError("transfer model needs at least 2 classes");
  if (backbone.output_shape().size() != 3) {
    throw InputError("backbone must end in a feature map (h,w,c), got " +
                     to_string(backbone.output_shape()));
  }
  const std::string prefix(kBackbonePrefix);
  std::vector<LayerSpec> layers;
  for (const LayerSpec& layer : backbone.layers()) {
    LayerSpec copy = layer;
    copy.name = prefix + layer.name;
    for (std::string& in : copy.inputs) in = prefix + in;
    layers.push_back(std::move(copy));
  }
  const std::string features = prefix + backbone.layers().back().name;
  const auto k = static_cast<std::int64_t>(class_names.size());
  layers.push_back({"head/gap", GlobalAvgPoolParams{}, {features}});
  layers.push_back({"head/dense", DenseParams{head_width, true}, {"head/gap"}});
  layers.push_back({"head/relu", ActivationParams{Activation::kRelu}, {"head/dense"}});
  layers.push_back({"head/dropout", DropoutParams{dropout_rate}, {"head/relu"}});
  layers.push_back({"head/logits", DenseParams{k, true}, {"head/dropout"}});
  layers.push_back({"head/softmax", ActivationParams{Activation::kSoftmax}, {"head/logits"}});
  ModelGraph model = ModelGraph::from_layers(std::move(layers), std::move(class_names),
                                             backbone.normalization());
  for (const Parameter& p : backbone.parameters()) {
    Parameter* target = model.find_parameter(prefix + p.name);
    target->value = p.value;
    target->trainable = p.trainable;
  }
  init_weights(model, seed, kHeadPrefix);
  return model;
}

}  // namespace tentnet
