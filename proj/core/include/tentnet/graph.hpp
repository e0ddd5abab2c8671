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

#ifndef TENTNET_GRAPH_HPP_
#define TENTNET_GRAPH_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tentnet/autodiff.hpp"
#include "tentnet/image.hpp"
#include "tentnet/kernels.hpp"
#include "tentnet/tensor.hpp"

namespace tentnet {

struct InputParams {
  std::int64_t height = 224;
  std::int64_t width = 224;
  std::int64_t channels = 3;
  friend bool operator==(const InputParams&, const InputParams&) = default;
};

struct Conv2dParams {
  std::int64_t filters = 0;
  std::int64_t kernel = 3;
  std::int64_t stride = 1;
  Padding padding = Padding::kSame;
  bool use_bias = true;
  friend bool operator==(const Conv2dParams&, const Conv2dParams&) = default;
};

struct DepthwiseConv2dParams {
  std::int64_t kernel = 3;
  std::int64_t stride = 1;
  Padding padding = Padding::kSame;
  bool use_bias = false;
  friend bool operator==(const DepthwiseConv2dParams&, const DepthwiseConv2dParams&) = default;
};

struct MaxPool2dParams {
  std::int64_t window = 2;
  std::int64_t stride = 2;
  friend bool operator==(const MaxPool2dParams&, const MaxPool2dParams&) = default;
};

// Input of rank above 1 (per example) is flattened before the product.
struct DenseParams {
  std::int64_t units = 0;
  bool use_bias = true;
  friend bool operator==(const DenseParams&, const DenseParams&) = default;
};

struct ActivationParams {
  Activation function = Activation::kRelu;
  friend bool operator==(const ActivationParams&, const ActivationParams&) = default;
};

struct GlobalAvgPoolParams {
  friend bool operator==(const GlobalAvgPoolParams&, const GlobalAvgPoolParams&) = default;
};

struct DropoutParams {
  double rate = 0.5;
  friend bool operator==(const DropoutParams&, const DropoutParams&) = default;
};

struct BatchNormParams {
  double eps = 1e-3;
  friend bool operator==(const BatchNormParams&, const BatchNormParams&) = default;
};

struct AddParams {
  friend bool operator==(const AddParams&, const AddParams&) = default;
};

struct MultiplyParams {
  friend bool operator==(const MultiplyParams&, const MultiplyParams&) = default;
};

struct FlattenParams {
  friend bool operator==(const FlattenParams&, const FlattenParams&) = default;
};

// Alternative order defines LayerKind.
using LayerParams =
    std::variant<InputParams, Conv2dParams, DepthwiseConv2dParams, MaxPool2dParams,
                 DenseParams, ActivationParams, GlobalAvgPoolParams, DropoutParams,
                 BatchNormParams, AddParams, MultiplyParams, FlattenParams>;

enum class LayerKind {
  kInput,
  kConv2d,
  kDepthwiseConv2d,
  kMaxPool2d,
  kDense,
  kActivation,
  kGlobalAvgPool,
  kDropout,
  kBatchNorm,
  kAdd,
  kMultiply,
  kFlatten,
};

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

struct LayerSpec {
  std::string name;
  LayerParams params;
  std::vector<std::string> inputs;

  LayerKind kind() const { return static_cast<LayerKind>(params.index()); }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class ParamRole {
  kKernel,
  kDepthwiseKernel,
  kBias,
  kGamma,
  kBeta,
  kMovingMean,
  kMovingVariance,
};

struct Parameter {
  std::string name;  // "<layer>/<role>"
  Tensor value;
  bool trainable = true;
  ParamRole role = ParamRole::kKernel;

  // Batchnorm moving statistics: never trained, never made trainable.
  bool is_statistic() const {
    return role == ParamRole::kMovingMean || role == ParamRole::kMovingVariance;
  }
  // Weight matrices and kernels carry the L2 penalty; biases and batchnorm
  // parameters do not.
  bool is_regularized() const {
    return role == ParamRole::kKernel || role == ParamRole::kDepthwiseKernel;
  }
};

// Per-channel (x - mean) / std applied to the input batch before the first
// layer.
struct InputNormalization {
  std::vector<float> mean;
  std::vector<float> std;
  friend bool operator==(const InputNormalization&, const InputNormalization&) = default;
};

class ModelGraph {
 public:
  // Validates names and edges, sorts topologically, infers shapes and
  // allocates zero-valued parameters. An empty `class_names` marks a feature
  // extractor (no softmax head required).
  static ModelGraph from_layers(std::vector<LayerSpec> layers,
                                std::vector<std::string> class_names,
                                std::optional<InputNormalization> normalization = std::nullopt);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::optional<InputNormalization>& normalization() const { return normalization_; }
  void set_normalization(std::optional<InputNormalization> normalization);

  std::vector<Parameter>& parameters() { return parameters_; }
  const std::vector<Parameter>& parameters() const { return parameters_; }
  Parameter* find_parameter(std::string_view name);
  const Parameter* find_parameter(std::string_view name) const;

  // Per-example output shape of a layer (batch axis excluded).
  const Shape& layer_shape(std::string_view layer) const;
  const Shape& output_shape() const { return shapes_.back(); }
  const LayerSpec& input_layer() const { return layers_.front(); }
  ImageSize input_size() const;

  // Total element count of all parameters, statistics included.
  std::int64_t parameter_count() const;

  // Sets `trainable` on every non-statistic parameter whose name starts with
  // `prefix` and returns how many flags changed. Throws InputError when the
  // prefix matches nothing.
  std::size_t set_trainable(std::string_view prefix, bool flag);
  std::size_t count_matching(std::string_view prefix) const;
  std::vector<std::string> trainable_parameter_names() const;

  // Hash over names and values of parameters whose name starts with prefix.
  std::uint64_t parameter_hash(std::string_view prefix = "") const;

  // Structural equality: layers, class names and normalization.
  bool same_structure(const ModelGraph& other) const;

 private:
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;
  std::vector<Parameter> parameters_;
  std::vector<std::string> class_names_;
  std::optional<InputNormalization> normalization_;
};

// Manifest JSON:
// {"class_names":[...], "layers":[{"name","kind","params":{...},"inputs":[...]}],
//  "normalization":{"mean":[...],"std":[...]}}  (normalization optional)
ModelGraph parse_manifest(std::string_view manifest_text);
std::string to_manifest(const ModelGraph& graph);
ModelGraph load_manifest(const std::filesystem::path& path);
void save_manifest(const ModelGraph& graph, const std::filesystem::path& path);

// He-uniform kernels (bound sqrt(6 / fan_in)), zero biases, unit gamma and
// variance, zero beta and mean. The kernel of a dense layer that feeds a
// softmax is zeroed so initial predictions are uniform. Each parameter draws from a generator seeded
// by (seed, parameter name). Only parameters under `prefix` are touched.
void init_weights(ModelGraph& graph, std::uint64_t seed, std::string_view prefix = "");

struct ForwardResult {
  Tape tape;
  Var output;
  // One var per graph parameter, in graph order.
  std::vector<Var> parameter_vars;
};

// Runs the graph on an (n,h,w,c) batch. `seed` feeds the dropout masks; the
// i-th dropout layer executed uses call index i.
ForwardResult forward(const ModelGraph& graph, const Tensor& batch, bool training,
                      std::uint64_t seed);

// Convenience: probabilities only.
Tensor predict(const ModelGraph& graph, const Tensor& batch);

// input -> 3 x [conv3x3 (32, 64, 128 filters, same) + relu + maxpool 2x2]
//       -> flatten -> dense 128 + relu -> dropout 0.5 -> dense k -> softmax
ModelGraph build_custom_cnn(ImageSize input, std::vector<std::string> class_names,
                            double dropout_rate = 0.5);

// backbone (layers renamed "backbone/<name>") -> head/gap -> head/dense
// (head_width) + relu -> head/dropout -> head/logits (k) -> head/softmax.
// Backbone parameter values and flags are copied; head parameters are
// initialized from `seed`.
ModelGraph build_transfer_model(const ModelGraph& backbone,
                                std::vector<std::string> class_names,
                                std::int64_t head_width, double dropout_rate,
                                std::uint64_t seed);

inline constexpr std::string_view kBackbonePrefix = "backbone/";
inline constexpr std::string_view kHeadPrefix = "head/";

}  // namespace tentnet

#endif  // TENTNET_GRAPH_HPP_
