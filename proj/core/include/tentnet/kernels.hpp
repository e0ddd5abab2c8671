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

#ifndef TENTNET_KERNELS_HPP_
#define TENTNET_KERNELS_HPP_

// Pure tensor kernels: each forward op has a matching backward that maps the
// upstream gradient to gradients of its differentiable inputs. These carry no
// tape state; see autodiff.hpp for the recording layer.

#include <cstdint>
#include <string_view>
#include <vector>

#include "tentnet/tensor.hpp"

namespace tentnet {

enum class Padding { kSame, kValid };
enum class Activation { kRelu, kSigmoid, kSwish, kSoftmax };

std::string_view to_string(Padding padding);
std::string_view to_string(Activation activation);
Padding parse_padding(std::string_view text);
Activation parse_activation(std::string_view text);

// Output extent along one spatial axis.
//   valid: floor((in - k) / stride) + 1
//   same:  ceil(in / stride), odd padding goes to the bottom/right
std::int64_t conv_output_size(std::int64_t in, std::int64_t k, std::int64_t stride,
                              Padding padding);
// Padding added before the first row/column.
std::int64_t conv_leading_pad(std::int64_t in, std::int64_t k, std::int64_t stride,
                              Padding padding);

namespace kernels {

// input (n,h,w,cin), kernel (kh,kw,cin,cout), bias (cout) or empty.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::int64_t stride, Padding padding);

struct ConvGrads {
  Tensor input;
  Tensor kernel;
  Tensor bias;  // empty when the op had no bias
};

ConvGrads conv2d_backward(const Tensor& input, const Tensor& kernel, bool has_bias,
                          std::int64_t stride, Padding padding, const Tensor& upstream);

// input (n,h,w,c), kernel (kh,kw,c,1), bias (c) or empty.
Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                        std::int64_t stride, Padding padding);

ConvGrads depthwise_conv2d_backward(const Tensor& input, const Tensor& kernel,
                                    bool has_bias, std::int64_t stride, Padding padding,
                                    const Tensor& upstream);

struct PoolResult {
  Tensor output;
  // Flat input index that supplied each output cell.
  std::vector<std::int64_t> argmax;
};

// Valid-padded max pooling. Ties resolve to the first maximum in row-major
// window order.
PoolResult maxpool2d(const Tensor& input, std::int64_t window, std::int64_t stride);
Tensor maxpool2d_backward(const Shape& input_shape, const std::vector<std::int64_t>& argmax,
                          const Tensor& upstream);

// input (n,din), weights (din,dout), bias (dout) or empty.
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, bool has_bias,
                          const Tensor& upstream);

// Softmax acts on the last axis.
Tensor activation(Activation kind, const Tensor& input);
Tensor activation_backward(Activation kind, const Tensor& input, const Tensor& output,
                           const Tensor& upstream);

// (n,h,w,c) -> (n,c)
Tensor global_avg_pool(const Tensor& input);
Tensor global_avg_pool_backward(const Shape& input_shape, const Tensor& upstream);

// Inverted-dropout multiplier: each element is 0 with probability `rate`,
// otherwise 1/(1-rate). A pure function of (shape, rate, seed, call_index).
Tensor dropout_mask(const Shape& shape, double rate, std::uint64_t seed,
                    std::uint64_t call_index);
Tensor dropout(const Tensor& input, double rate, std::uint64_t seed,
               std::uint64_t call_index, bool training);

// Inference-mode batch normalization over the channel (last) axis.
Tensor batchnorm_inference(const Tensor& input, const Tensor& mean, const Tensor& var,
                           const Tensor& gamma, const Tensor& beta, double eps);

struct BatchNormGrads {
  Tensor input;
  Tensor gamma;
  Tensor beta;
};

BatchNormGrads batchnorm_inference_backward(const Tensor& input, const Tensor& mean,
                                            const Tensor& var, const Tensor& gamma,
                                            double eps, const Tensor& upstream);

// Elementwise add of equal shapes.
Tensor add(const Tensor& a, const Tensor& b);

// Elementwise product. `b` may also be (n,c) against an (n,h,w,c) `a`, in
// which case it broadcasts over the spatial axes.
Tensor multiply(const Tensor& a, const Tensor& b);

struct BinaryGrads {
  Tensor a;
  Tensor b;
};

BinaryGrads multiply_backward(const Tensor& a, const Tensor& b, const Tensor& upstream);

// Smallest probability fed to the logarithm.
inline constexpr float kProbabilityFloor = 1e-7f;

// Mean over rows of -sum(target * log(clamp(prob))).
double cross_entropy(const Tensor& probs, const Tensor& targets);
Tensor cross_entropy_backward(const Tensor& probs, const Tensor& targets, double upstream);

}  // namespace kernels
}  // namespace tentnet

#endif  // TENTNET_KERNELS_HPP_
