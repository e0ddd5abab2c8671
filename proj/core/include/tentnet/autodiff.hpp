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

#ifndef TENTNET_AUTODIFF_HPP_
#define TENTNET_AUTODIFF_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tentnet/kernels.hpp"
#include "tentnet/tensor.hpp"

namespace tentnet {

// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = 0;
  friend bool operator==(Var, Var) = default;
};

// Records forward ops in execution order (which is a topological order) and
// replays them in reverse to accumulate gradients.
class Tape {
 public:
  // Maps the upstream gradient of a node to gradients for each of its inputs,
  // in input order. An empty tensor means "no contribution".
  using BackwardFn = std::function<std::vector<Tensor>(const Tape&, const Tensor&)>;

  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Appends an op node. Throws NumericError if `value` is not finite.
  Var record(std::string op, std::vector<Var> inputs, Tensor value, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  const std::string& op(Var v) const { return nodes_.at(v.id).op; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Reverse pass from a scalar node. Each node is visited once; gradients
  // reaching a node along several paths are summed.
  void backward(Var loss);

  // Gradient of `v` after backward(). Zeros when nothing flowed into it.
  Tensor grad(Var v) const;

 private:
  struct Node {
    std::string op;
    std::vector<Var> inputs;
    Tensor value;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

// Recording wrappers around the kernels. Pass kNoBias for bias-free layers.
inline constexpr Var kNoBias{static_cast<std::size_t>(-1)};

Var conv2d(Tape& tape, Var input, Var kernel, Var bias, std::int64_t stride,
           Padding padding);
Var depthwise_conv2d(Tape& tape, Var input, Var kernel, Var bias, std::int64_t stride,
                     Padding padding);
Var maxpool2d(Tape& tape, Var input, std::int64_t window, std::int64_t stride);
Var dense(Tape& tape, Var input, Var weights, Var bias);
Var activation(Tape& tape, Activation kind, Var input);
Var global_avg_pool(Tape& tape, Var input);
Var dropout(Tape& tape, Var input, double rate, std::uint64_t seed,
            std::uint64_t call_index, bool training);
Var batchnorm_inference(Tape& tape, Var input, Var mean, Var var, Var gamma, Var beta,
                        double eps);
Var add(Tape& tape, Var a, Var b);
Var multiply(Tape& tape, Var a, Var b);
Var flatten(Tape& tape, Var input);
Var sum(Tape& tape, Var input);
Var scale(Tape& tape, Var input, double factor);

// Mean categorical cross-entropy of probability rows against one-hot targets.
Var cross_entropy(Tape& tape, Var probs, const Tensor& targets);
// lambda * sum of squares over every var in `weights`.
Var l2_penalty(Tape& tape, std::span<const Var> weights, double lambda);
// cross_entropy + l2_penalty.
Var loss_ce_l2(Tape& tape, Var probs, const Tensor& targets, std::span<const Var> weights,
               double lambda);

// Tensor-level form of the same loss, for callers without a tape.
double loss_ce_l2(const Tensor& probs, const Tensor& targets,
                  std::span<const Tensor> weights, double lambda);

}  // namespace tentnet

#endif  // TENTNET_AUTODIFF_HPP_
