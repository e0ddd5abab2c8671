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

#include "tentnet/autodiff.hpp"

#include <memory>
#include <utility>

#include "tentnet/error.hpp"

namespace tentnet {

Var Tape::leaf(Tensor value, bool requires_grad) {
  if (!value.all_finite()) throw NumericError("leaf tensor contains NaN or Inf");
  nodes_.push_back(Node{"leaf", {}, std::move(value), nullptr, requires_grad});
  return Var{nodes_.size() - 1};
}

Var Tape::record(std::string op, std::vector<Var> inputs, Tensor value,
                 BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError(op + " produced NaN or Inf (output shape " +
                       to_string(value.shape()) + ")");
  }
  bool requires_grad = false;
  for (Var in : inputs) {
    if (in.id >= nodes_.size()) throw Error(op + ": input refers to an unknown node");
    requires_grad = requires_grad || nodes_[in.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(op), std::move(inputs), std::move(value),
                        std::move(backward), requires_grad});
  return Var{nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  const Tensor& loss_value = value(loss);
  if (loss_value.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " +
                     to_string(loss_value.shape()));
  }
  grads_.assign(nodes_.size(), Tensor());
  grads_[loss.id] = Tensor(loss_value.shape(), 1.0f);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (grads_[id].empty() || !node.backward || !node.requires_grad) continue;
    std::vector<Tensor> input_grads = node.backward(*this, grads_[id]);
    for (std::size_t i = 0; i < node.inputs.size() && i < input_grads.size(); ++i) {
      const Var in = node.inputs[i];
      if (input_grads[i].empty() || !nodes_[in.id].requires_grad) continue;
      if (grads_[in.id].empty()) {
        grads_[in.id] = std::move(input_grads[i]);
      } else {
        add_inplace(grads_[in.id], input_grads[i]);
      }
    }
  }
}

Tensor Tape::grad(Var v) const {
  if (v.id < grads_.size() && !grads_[v.id].empty()) return grads_[v.id];
  return zeros_like(value(v));
}

namespace {

bool has(Var v) { return v.id != kNoBias.id; }

const Tensor& optional_value(const Tape& tape, Var v) {
  static const Tensor kEmpty;
  return has(v) ? tape.value(v) : kEmpty;
}

std::vector<Var> with_optional(std::vector<Var> inputs, Var maybe) {
  if (has(maybe)) inputs.push_back(maybe);
  return inputs;
}

}  // namespace

Var conv2d(Tape& tape, Var input, Var kernel, Var bias, std::int64_t stride,
           Padding padding) {
  Tensor out = kernels::conv2d(tape.value(input), tape.value(kernel),
                               optional_value(tape, bias), stride, padding);
  const bool has_bias = has(bias);
  return tape.record(
      "conv2d", with_optional({input, kernel}, bias), std::move(out),
      [input, kernel, has_bias, stride, padding](const Tape& t, const Tensor& g) {
        kernels::ConvGrads grads = kernels::conv2d_backward(
            t.value(input), t.value(kernel), has_bias, stride, padding, g);
        std::vector<Tensor> result{std::move(grads.input), std::move(grads.kernel)};
        if (has_bias) result.push_back(std::move(grads.bias));
        return result;
      });
}

Var depthwise_conv2d(Tape& tape, Var input, Var kernel, Var bias, std::int64_t stride,
                     Padding padding) {
  Tensor out = kernels::depthwise_conv2d(tape.value(input), tape.value(kernel),
                                         optional_value(tape, bias), stride, padding);
  const bool has_bias = has(bias);
  return tape.record(
      "depthwise_conv2d", with_optional({input, kernel}, bias), std::move(out),
      [input, kernel, has_bias, stride, padding](const Tape& t, const Tensor& g) {
        kernels::ConvGrads grads = kernels::depthwise_conv2d_backward(
            t.value(input), t.value(kernel), has_bias, stride, padding, g);
        std::vector<Tensor> result{std::move(grads.input), std::move(grads.kernel)};
        if (has_bias) result.push_back(std::move(grads.bias));
        return result;
      });
}

Var maxpool2d(Tape& tape, Var input, std::int64_t window, std::int64_t stride) {
  kernels::PoolResult pooled = kernels::maxpool2d(tape.value(input), window, stride);
  auto argmax = std::make_shared<std::vector<std::int64_t>>(std::move(pooled.argmax));
  const Shape input_shape = tape.value(input).shape();
  return tape.record("maxpool2d", {input}, std::move(pooled.output),
                     [argmax, input_shape](const Tape&, const Tensor& g) {
                       return std::vector<Tensor>{
                           kernels::maxpool2d_backward(input_shape, *argmax, g)};
                     });
}

Var dense(Tape& tape, Var input, Var weights, Var bias) {
  Tensor out = kernels::dense(tape.value(input), tape.value(weights),
                              optional_value(tape, bias));
  const bool has_bias = has(bias);
  return tape.record(
      "dense", with_optional({input, weights}, bias), std::move(out),
      [input, weights, has_bias](const Tape& t, const Tensor& g) {
        kernels::DenseGrads grads =
            kernels::dense_backward(t.value(input), t.value(weights), has_bias, g);
        std::vector<Tensor> result{std::move(grads.input), std::move(grads.weights)};
        if (has_bias) result.push_back(std::move(grads.bias));
        return result;
      });
}

Var activation(Tape& tape, Activation kind, Var input) {
  Tensor out = kernels::activation(kind, tape.value(input));
  // The node's own id is the next slot on the tape.
  const Var self{tape.size()};
  return tape.record(std::string(to_string(kind)), {input}, std::move(out),
                     [kind, input, self](const Tape& t, const Tensor& g) {
                       return std::vector<Tensor>{kernels::activation_backward(
                           kind, t.value(input), t.value(self), g)};
                     });
}

Var global_avg_pool(Tape& tape, Var input) {
  const Shape input_shape = tape.value(input).shape();
  return tape.record("global_avg_pool", {input}, kernels::global_avg_pool(tape.value(input)),
                     [input_shape](const Tape&, const Tensor& g) {
                       return std::vector<Tensor>{
                           kernels::global_avg_pool_backward(input_shape, g)};
                     });
}

Var dropout(Tape& tape, Var input, double rate, std::uint64_t seed,
            std::uint64_t call_index, bool training) {
  const Tensor& x = tape.value(input);
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw InputError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) {
    return tape.record("dropout", {input}, x,
                       [](const Tape&, const Tensor& g) { return std::vector<Tensor>{g}; });
  }
  auto mask = std::make_shared<Tensor>(kernels::dropout_mask(x.shape(), rate, seed, call_index));
  return tape.record("dropout", {input}, kernels::multiply(x, *mask),
                     [mask](const Tape&, const Tensor& g) {
                       return std::vector<Tensor>{kernels::multiply(g, *mask)};
                     });
}

Var batchnorm_inference(Tape& tape, Var input, Var mean, Var var, Var gamma, Var beta,
                        double eps) {
  Tensor out = kernels::batchnorm_inference(tape.value(input), tape.value(mean),
                                            tape.value(var), tape.value(gamma),
                                            tape.value(beta), eps);
  return tape.record(
      "batchnorm", {input, mean, var, gamma, beta}, std::move(out),
      [input, mean, var, gamma, eps](const Tape& t, const Tensor& g) {
        kernels::BatchNormGrads grads = kernels::batchnorm_inference_backward(
            t.value(input), t.value(mean), t.value(var), t.value(gamma), eps, g);
        return std::vector<Tensor>{std::move(grads.input), Tensor(), Tensor(),
                                   std::move(grads.gamma), std::move(grads.beta)};
      });
}

Var add(Tape& tape, Var a, Var b) {
  return tape.record("add", {a, b}, kernels::add(tape.value(a), tape.value(b)),
                     [](const Tape&, const Tensor& g) { return std::vector<Tensor>{g, g}; });
}

Var multiply(Tape& tape, Var a, Var b) {
  return tape.record("multiply", {a, b}, kernels::multiply(tape.value(a), tape.value(b)),
                     [a, b](const Tape& t, const Tensor& g) {
                       kernels::BinaryGrads grads =
                           kernels::multiply_backward(t.value(a), t.value(b), g);
                       return std::vector<Tensor>{std::move(grads.a), std::move(grads.b)};
                     });
}

Var flatten(Tape& tape, Var input) {
  const Tensor& x = tape.value(input);
  if (x.rank() < 1) throw ShapeError("flatten of a scalar");
  const Shape input_shape = x.shape();
  const std::int64_t n = x.dim(0);
  return tape.record("flatten", {input},
                     x.reshaped(Shape{n, static_cast<std::int64_t>(x.size()) / n}),
                     [input_shape](const Tape&, const Tensor& g) {
                       return std::vector<Tensor>{g.reshaped(input_shape)};
                     });
}

Var sum(Tape& tape, Var input) {
  const Tensor& x = tape.value(input);
  double total = 0.0;
  for (float v : x.data()) total += v;
  const Shape input_shape = x.shape();
  return tape.record("sum", {input}, Tensor::scalar(static_cast<float>(total)),
                     [input_shape](const Tape&, const Tensor& g) {
                       return std::vector<Tensor>{Tensor(input_shape, g.item())};
                     });
}

Var scale(Tape& tape, Var input, double factor) {
  Tensor out = tape.value(input);
  for (float& v : out.data()) v = static_cast<float>(v * factor);
  return tape.record("scale", {input}, std::move(out), [factor](const Tape&, const Tensor& g) {
    Tensor dx = g;
    for (float& v : dx.data()) v = static_cast<float>(v * factor);
    return std::vector<Tensor>{std::move(dx)};
  });
}

Var cross_entropy(Tape& tape, Var probs, const Tensor& targets) {
  const double loss = kernels::cross_entropy(tape.value(probs), targets);
  auto target_copy = std::make_shared<Tensor>(targets);
  return tape.record("cross_entropy", {probs}, Tensor::scalar(static_cast<float>(loss)),
                     [probs, target_copy](const Tape& t, const Tensor& g) {
                       return std::vector<Tensor>{kernels::cross_entropy_backward(
                           t.value(probs), *target_copy, g.item())};
                     });
}

Var l2_penalty(Tape& tape, std::span<const Var> weights, double lambda) {
  double total = 0.0;
  for (Var w : weights) {
    for (float v : tape.value(w).data()) total += static_cast<double>(v) * v;
  }
  std::vector<Var> inputs(weights.begin(), weights.end());
  return tape.record("l2_penalty", inputs, Tensor::scalar(static_cast<float>(lambda * total)),
                     [inputs, lambda](const Tape& t, const Tensor& g) {
                       std::vector<Tensor> grads;
                       grads.reserve(inputs.size());
                       const double factor = 2.0 * lambda * g.item();
                       for (Var w : inputs) {
                         Tensor dw = t.value(w);
                         for (float& v : dw.data()) v = static_cast<float>(v * factor);
                         grads.push_back(std::move(dw));
                       }
                       return grads;
                     });
}

Var loss_ce_l2(Tape& tape, Var probs, const Tensor& targets, std::span<const Var> weights,
               double lambda) {
  const Var ce = cross_entropy(tape, probs, targets);
  if (lambda == 0.0 || weights.empty()) return ce;
  return add(tape, ce, l2_penalty(tape, weights, lambda));
}

double loss_ce_l2(const Tensor& probs, const Tensor& targets,
                  std::span<const Tensor> weights, double lambda) {
  double penalty = 0.0;
  for (const Tensor& w : weights) {
    for (float v : w.data()) penalty += static_cast<double>(v) * v;
  }
  return kernels::cross_entropy(probs, targets) + lambda * penalty;
}

}  // namespace tentnet
