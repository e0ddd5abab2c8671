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

#include "tentnet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "tentnet/error.hpp"
#include "tentnet/rng.hpp"

namespace tentnet {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

void require_rank(const Tensor& t, std::size_t rank, std::string_view op,
                  std::string_view what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + std::string(what) + " must have rank " +
                     std::to_string(rank) + ", got shape " + to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + to_string(a.shape()) + " and " +
                     to_string(b.shape()) + " differ");
  }
}

void require_bias(const Tensor& bias, std::int64_t channels, std::string_view op) {
  if (!bias.empty() && (bias.rank() != 1 || bias.dim(0) != channels)) {
    throw ShapeError(std::string(op) + ": bias shape " + to_string(bias.shape()) +
                     " does not match " + std::to_string(channels) + " channels");
  }
}

struct Window {
  std::int64_t n, h, w, c;
  std::int64_t kh, kw;
  std::int64_t out_h, out_w;
  std::int64_t pad_top, pad_left;
  std::int64_t stride;
};

Window conv_window(const Tensor& input, std::int64_t kh, std::int64_t kw,
                   std::int64_t stride, Padding padding, std::string_view op,
                   const Tensor& kernel) {
  if (stride < 1) throw ShapeError(std::string(op) + ": stride must be positive");
  Window g{};
  g.n = input.dim(0);
  g.h = input.dim(1);
  g.w = input.dim(2);
  g.c = input.dim(3);
  g.kh = kh;
  g.kw = kw;
  g.stride = stride;
  const std::int64_t padded_h =
      padding == Padding::kSame ? std::max(g.h, kh) : g.h;
  const std::int64_t padded_w =
      padding == Padding::kSame ? std::max(g.w, kw) : g.w;
  if (kh > padded_h || kw > padded_w) {
    throw ShapeError(std::string(op) + ": kernel " + to_string(kernel.shape()) +
                     " larger than input " + to_string(input.shape()));
  }
  g.out_h = conv_output_size(g.h, kh, stride, padding);
  g.out_w = conv_output_size(g.w, kw, stride, padding);
  g.pad_top = conv_leading_pad(g.h, kh, stride, padding);
  g.pad_left = conv_leading_pad(g.w, kw, stride, padding);
  return g;
}

// Rows: output positions of sample `n`. Columns: (ky, kx, c).
void im2col(const float* input, const Window& g, float* cols) {
  const std::int64_t row_len = g.kh * g.kw * g.c;
  for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
    for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
      float* row = cols + (oy * g.out_w + ox) * row_len;
      for (std::int64_t ky = 0; ky < g.kh; ++ky) {
        const std::int64_t iy = oy * g.stride - g.pad_top + ky;
        for (std::int64_t kx = 0; kx < g.kw; ++kx) {
          const std::int64_t ix = ox * g.stride - g.pad_left + kx;
          float* dst = row + (ky * g.kw + kx) * g.c;
          if (iy < 0 || iy >= g.h || ix < 0 || ix >= g.w) {
            std::fill(dst, dst + g.c, 0.0f);
          } else {
            const float* src = input + (iy * g.w + ix) * g.c;
            std::copy(src, src + g.c, dst);
          }
        }
      }
    }
  }
}

void col2im_add(const float* cols, const Window& g, float* input_grad) {
  const std::int64_t row_len = g.kh * g.kw * g.c;
  for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
    for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
      const float* row = cols + (oy * g.out_w + ox) * row_len;
      for (std::int64_t ky = 0; ky < g.kh; ++ky) {
        const std::int64_t iy = oy * g.stride - g.pad_top + ky;
        if (iy < 0 || iy >= g.h) continue;
        for (std::int64_t kx = 0; kx < g.kw; ++kx) {
          const std::int64_t ix = ox * g.stride - g.pad_left + kx;
          if (ix < 0 || ix >= g.w) continue;
          const float* src = row + (ky * g.kw + kx) * g.c;
          float* dst = input_grad + (iy * g.w + ix) * g.c;
          for (std::int64_t c = 0; c < g.c; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

bool is_pointwise(const Window& g) {
  return g.kh == 1 && g.kw == 1 && g.stride == 1 && g.pad_top == 0 && g.pad_left == 0;
}

// Sums `upstream` over every axis but the last.
Tensor channel_sums(const Tensor& upstream) {
  const std::int64_t channels = upstream.shape().back();
  std::vector<double> acc(static_cast<std::size_t>(channels), 0.0);
  const std::size_t rows = upstream.size() / static_cast<std::size_t>(channels);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* src = upstream.raw() + r * channels;
    for (std::int64_t c = 0; c < channels; ++c) acc[c] += src[c];
  }
  Tensor out(Shape{channels});
  for (std::int64_t c = 0; c < channels; ++c) out[c] = static_cast<float>(acc[c]);
  return out;
}

float sigmoid(float x) {
  if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
  const float e = std::exp(x);
  return e / (1.0f + e);
}

}  // namespace

std::string_view to_string(Padding padding) {
  return padding == Padding::kSame ? "same" : "valid";
}

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSwish: return "swish";
    case Activation::kSoftmax: return "softmax";
  }
  return "unknown";
}

Padding parse_padding(std::string_view text) {
  if (text == "same") return Padding::kSame;
  if (text == "valid") return Padding::kValid;
  throw InputError("unknown padding '" + std::string(text) + "'");
}

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::kRelu;
  if (text == "sigmoid") return Activation::kSigmoid;
  if (text == "swish") return Activation::kSwish;
  if (text == "softmax") return Activation::kSoftmax;
  throw InputError("unknown activation '" + std::string(text) + "'");
}

std::int64_t conv_output_size(std::int64_t in, std::int64_t k, std::int64_t stride,
                              Padding padding) {
  if (padding == Padding::kSame) return (in + stride - 1) / stride;
  return (in - k) / stride + 1;
}

std::int64_t conv_leading_pad(std::int64_t in, std::int64_t k, std::int64_t stride,
                              Padding padding) {
  if (padding == Padding::kValid) return 0;
  const std::int64_t out = conv_output_size(in, k, stride, padding);
  const std::int64_t total = std::max<std::int64_t>((out - 1) * stride + k - in, 0);
  return total / 2;
}

namespace kernels {

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::int64_t stride, Padding padding) {
  require_rank(input, 4, "conv2d", "input");
  require_rank(kernel, 4, "conv2d", "kernel");
  if (input.dim(3) != kernel.dim(2)) {
    throw ShapeError("conv2d: input " + to_string(input.shape()) + " has " +
                     std::to_string(input.dim(3)) + " channels but kernel " +
                     to_string(kernel.shape()) + " expects " +
                     std::to_string(kernel.dim(2)));
  }
  const Window g = conv_window(input, kernel.dim(0), kernel.dim(1), stride, padding,
                               "conv2d", kernel);
  const std::int64_t cout = kernel.dim(3);
  require_bias(bias, cout, "conv2d");

  const std::int64_t positions = g.out_h * g.out_w;
  const std::int64_t row_len = g.kh * g.kw * g.c;
  Tensor output(Shape{g.n, g.out_h, g.out_w, cout});
  ConstMatrixMap weights(kernel.raw(), row_len, cout);
  std::vector<float> cols;
  const bool pointwise = is_pointwise(g);
  if (!pointwise) cols.resize(static_cast<std::size_t>(positions * row_len));

  for (std::int64_t n = 0; n < g.n; ++n) {
    const float* sample = input.raw() + n * g.h * g.w * g.c;
    const float* patches = sample;
    if (!pointwise) {
      im2col(sample, g, cols.data());
      patches = cols.data();
    }
    MatrixMap out(output.raw() + n * positions * cout, positions, cout);
    out.noalias() = ConstMatrixMap(patches, positions, row_len) * weights;
    if (!bias.empty()) {
      out.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias.raw(), cout);
    }
  }
  return output;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& kernel, bool has_bias,
                          std::int64_t stride, Padding padding, const Tensor& upstream) {
  const Window g = conv_window(input, kernel.dim(0), kernel.dim(1), stride, padding,
                               "conv2d", kernel);
  const std::int64_t cout = kernel.dim(3);
  const std::int64_t positions = g.out_h * g.out_w;
  const std::int64_t row_len = g.kh * g.kw * g.c;
  if (upstream.shape() != Shape{g.n, g.out_h, g.out_w, cout}) {
    throw ShapeError("conv2d backward: upstream " + to_string(upstream.shape()) +
                     " does not match output");
  }

  ConvGrads grads;
  grads.input = zeros_like(input);
  grads.kernel = zeros_like(kernel);
  MatrixMap kernel_grad(grads.kernel.raw(), row_len, cout);
  ConstMatrixMap weights(kernel.raw(), row_len, cout);
  const bool pointwise = is_pointwise(g);
  std::vector<float> cols(pointwise ? 0 : static_cast<std::size_t>(positions * row_len));
  std::vector<float> col_grad(pointwise ? 0 : static_cast<std::size_t>(positions * row_len));

  for (std::int64_t n = 0; n < g.n; ++n) {
    const float* sample = input.raw() + n * g.h * g.w * g.c;
    float* sample_grad = grads.input.raw() + n * g.h * g.w * g.c;
    ConstMatrixMap dout(upstream.raw() + n * positions * cout, positions, cout);
    if (pointwise) {
      kernel_grad.noalias() += ConstMatrixMap(sample, positions, row_len).transpose() * dout;
      MatrixMap(sample_grad, positions, row_len).noalias() = dout * weights.transpose();
    } else {
      im2col(sample, g, cols.data());
      kernel_grad.noalias() +=
          ConstMatrixMap(cols.data(), positions, row_len).transpose() * dout;
      MatrixMap(col_grad.data(), positions, row_len).noalias() = dout * weights.transpose();
      col2im_add(col_grad.data(), g, sample_grad);
    }
  }
  if (has_bias) grads.bias = channel_sums(upstream);
  return grads;
}

Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                        std::int64_t stride, Padding padding) {
  require_rank(input, 4, "depthwise_conv2d", "input");
  require_rank(kernel, 4, "depthwise_conv2d", "kernel");
  if (input.dim(3) != kernel.dim(2) || kernel.dim(3) != 1) {
    throw ShapeError("depthwise_conv2d: input " + to_string(input.shape()) +
                     " incompatible with kernel " + to_string(kernel.shape()));
  }
  const Window g = conv_window(input, kernel.dim(0), kernel.dim(1), stride, padding,
                               "depthwise_conv2d", kernel);
  require_bias(bias, g.c, "depthwise_conv2d");
  Tensor output(Shape{g.n, g.out_h, g.out_w, g.c});
  std::vector<double> acc(static_cast<std::size_t>(g.c));
  for (std::int64_t n = 0; n < g.n; ++n) {
    const float* sample = input.raw() + n * g.h * g.w * g.c;
    for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
      for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          const std::int64_t iy = oy * g.stride - g.pad_top + ky;
          if (iy < 0 || iy >= g.h) continue;
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const std::int64_t ix = ox * g.stride - g.pad_left + kx;
            if (ix < 0 || ix >= g.w) continue;
            const float* src = sample + (iy * g.w + ix) * g.c;
            const float* k = kernel.raw() + (ky * g.kw + kx) * g.c;
            for (std::int64_t c = 0; c < g.c; ++c) {
              acc[c] += static_cast<double>(src[c]) * k[c];
            }
          }
        }
        float* dst = output.raw() + ((n * g.out_h + oy) * g.out_w + ox) * g.c;
        for (std::int64_t c = 0; c < g.c; ++c) {
          dst[c] = static_cast<float>(acc[c]) + (bias.empty() ? 0.0f : bias[c]);
        }
      }
    }
  }
  return output;
}

ConvGrads depthwise_conv2d_backward(const Tensor& input, const Tensor& kernel,
                                    bool has_bias, std::int64_t stride, Padding padding,
                                    const Tensor& upstream) {
  const Window g = conv_window(input, kernel.dim(0), kernel.dim(1), stride, padding,
                               "depthwise_conv2d", kernel);
  if (upstream.shape() != Shape{g.n, g.out_h, g.out_w, g.c}) {
    throw ShapeError("depthwise_conv2d backward: upstream " +
                     to_string(upstream.shape()) + " does not match output");
  }
  ConvGrads grads;
  grads.input = zeros_like(input);
  std::vector<double> kernel_acc(kernel.size(), 0.0);
  for (std::int64_t n = 0; n < g.n; ++n) {
    const float* sample = input.raw() + n * g.h * g.w * g.c;
    float* sample_grad = grads.input.raw() + n * g.h * g.w * g.c;
    for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
      for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
        const float* dout = upstream.raw() + ((n * g.out_h + oy) * g.out_w + ox) * g.c;
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          const std::int64_t iy = oy * g.stride - g.pad_top + ky;
          if (iy < 0 || iy >= g.h) continue;
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const std::int64_t ix = ox * g.stride - g.pad_left + kx;
            if (ix < 0 || ix >= g.w) continue;
            const std::int64_t offset = (iy * g.w + ix) * g.c;
            const std::int64_t koffset = (ky * g.kw + kx) * g.c;
            for (std::int64_t c = 0; c < g.c; ++c) {
              kernel_acc[koffset + c] += static_cast<double>(sample[offset + c]) * dout[c];
              sample_grad[offset + c] += kernel[koffset + c] * dout[c];
            }
          }
        }
      }
    }
  }
  grads.kernel = zeros_like(kernel);
  for (std::size_t i = 0; i < kernel_acc.size(); ++i) {
    grads.kernel[i] = static_cast<float>(kernel_acc[i]);
  }
  if (has_bias) grads.bias = channel_sums(upstream);
  return grads;
}

PoolResult maxpool2d(const Tensor& input, std::int64_t window, std::int64_t stride) {
  require_rank(input, 4, "maxpool2d", "input");
  if (window < 1 || stride < 1) {
    throw ShapeError("maxpool2d: window and stride must be positive");
  }
  const std::int64_t n = input.dim(0), h = input.dim(1), w = input.dim(2),
                     c = input.dim(3);
  if (window > h || window > w) {
    throw ShapeError("maxpool2d: window " + std::to_string(window) +
                     " larger than input " + to_string(input.shape()));
  }
  const std::int64_t out_h = (h - window) / stride + 1;
  const std::int64_t out_w = (w - window) / stride + 1;
  PoolResult result;
  result.output = Tensor(Shape{n, out_h, out_w, c});
  result.argmax.resize(result.output.size());
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t oy = 0; oy < out_h; ++oy) {
      for (std::int64_t ox = 0; ox < out_w; ++ox) {
        for (std::int64_t ch = 0; ch < c; ++ch) {
          std::int64_t best = ((b * h + oy * stride) * w + ox * stride) * c + ch;
          float best_value = input[best];
          for (std::int64_t wy = 0; wy < window; ++wy) {
            for (std::int64_t wx = 0; wx < window; ++wx) {
              const std::int64_t idx =
                  ((b * h + oy * stride + wy) * w + ox * stride + wx) * c + ch;
              if (input[idx] > best_value) {
                best_value = input[idx];
                best = idx;
              }
            }
          }
          const std::int64_t out_idx = ((b * out_h + oy) * out_w + ox) * c + ch;
          result.output[out_idx] = best_value;
          result.argmax[out_idx] = best;
        }
      }
    }
  }
  return result;
}

Tensor maxpool2d_backward(const Shape& input_shape, const std::vector<std::int64_t>& argmax,
                          const Tensor& upstream) {
  if (argmax.size() != upstream.size()) {
    throw ShapeError("maxpool2d backward: upstream " + to_string(upstream.shape()) +
                     " does not match pooled output");
  }
  Tensor grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) grad[argmax[i]] += upstream[i];
  return grad;
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(input, 2, "dense", "input");
  require_rank(weights, 2, "dense", "weights");
  if (input.dim(1) != weights.dim(0)) {
    throw ShapeError("dense: input " + to_string(input.shape()) +
                     " incompatible with weights " + to_string(weights.shape()));
  }
  require_bias(bias, weights.dim(1), "dense");
  const std::int64_t n = input.dim(0), din = input.dim(1), dout = weights.dim(1);
  Tensor output(Shape{n, dout});
  MatrixMap out(output.raw(), n, dout);
  out.noalias() = ConstMatrixMap(input.raw(), n, din) * ConstMatrixMap(weights.raw(), din, dout);
  if (!bias.empty()) {
    out.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias.raw(), dout);
  }
  return output;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, bool has_bias,
                          const Tensor& upstream) {
  const std::int64_t n = input.dim(0), din = input.dim(1), dout = weights.dim(1);
  if (upstream.shape() != Shape{n, dout}) {
    throw ShapeError("dense backward: upstream " + to_string(upstream.shape()) +
                     " does not match output");
  }
  DenseGrads grads;
  grads.input = Tensor(input.shape());
  grads.weights = Tensor(weights.shape());
  ConstMatrixMap dy(upstream.raw(), n, dout);
  MatrixMap(grads.input.raw(), n, din).noalias() =
      dy * ConstMatrixMap(weights.raw(), din, dout).transpose();
  MatrixMap(grads.weights.raw(), din, dout).noalias() =
      ConstMatrixMap(input.raw(), n, din).transpose() * dy;
  if (has_bias) grads.bias = channel_sums(upstream);
  return grads;
}

Tensor activation(Activation kind, const Tensor& input) {
  Tensor out = zeros_like(input);
  const float* x = input.raw();
  float* y = out.raw();
  const std::size_t size = input.size();
  switch (kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < size; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < size; ++i) y[i] = sigmoid(x[i]);
      break;
    case Activation::kSwish:
      for (std::size_t i = 0; i < size; ++i) y[i] = x[i] * sigmoid(x[i]);
      break;
    case Activation::kSoftmax: {
      if (input.rank() == 0) throw ShapeError("softmax of a scalar");
      const std::size_t k = static_cast<std::size_t>(input.shape().back());
      for (std::size_t row = 0; row < size / k; ++row) {
        const float* xr = x + row * k;
        float* yr = y + row * k;
        const float max = *std::max_element(xr, xr + k);
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) total += std::exp(static_cast<double>(xr[j] - max));
        for (std::size_t j = 0; j < k; ++j) {
          yr[j] = static_cast<float>(std::exp(static_cast<double>(xr[j] - max)) / total);
        }
      }
      break;
    }
  }
  return out;
}

Tensor activation_backward(Activation kind, const Tensor& input, const Tensor& output,
                           const Tensor& upstream) {
  require_same_shape(input, upstream, "activation backward");
  Tensor grad = zeros_like(input);
  const float* x = input.raw();
  const float* y = output.raw();
  const float* g = upstream.raw();
  float* dx = grad.raw();
  const std::size_t size = input.size();
  switch (kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < size; ++i) dx[i] = x[i] > 0.0f ? g[i] : 0.0f;
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < size; ++i) dx[i] = g[i] * y[i] * (1.0f - y[i]);
      break;
    case Activation::kSwish:
      for (std::size_t i = 0; i < size; ++i) {
        const float s = sigmoid(x[i]);
        dx[i] = g[i] * (s + x[i] * s * (1.0f - s));
      }
      break;
    case Activation::kSoftmax: {
      const std::size_t k = static_cast<std::size_t>(input.shape().back());
      for (std::size_t row = 0; row < size / k; ++row) {
        const std::size_t base = row * k;
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += static_cast<double>(g[base + j]) * y[base + j];
        for (std::size_t j = 0; j < k; ++j) {
          dx[base + j] = static_cast<float>(y[base + j] * (g[base + j] - dot));
        }
      }
      break;
    }
  }
  return grad;
}

Tensor global_avg_pool(const Tensor& input) {
  require_rank(input, 4, "global_avg_pool", "input");
  const std::int64_t n = input.dim(0), c = input.dim(3);
  const std::int64_t cells = input.dim(1) * input.dim(2);
  Tensor out(Shape{n, c});
  std::vector<double> acc(static_cast<std::size_t>(c));
  for (std::int64_t b = 0; b < n; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const float* src = input.raw() + b * cells * c;
    for (std::int64_t i = 0; i < cells; ++i) {
      for (std::int64_t ch = 0; ch < c; ++ch) acc[ch] += src[i * c + ch];
    }
    for (std::int64_t ch = 0; ch < c; ++ch) {
      out[b * c + ch] = static_cast<float>(acc[ch] / static_cast<double>(cells));
    }
  }
  return out;
}

Tensor global_avg_pool_backward(const Shape& input_shape, const Tensor& upstream) {
  const std::int64_t n = input_shape[0], c = input_shape[3];
  const std::int64_t cells = input_shape[1] * input_shape[2];
  if (upstream.shape() != Shape{n, c}) {
    throw ShapeError("global_avg_pool backward: upstream " + to_string(upstream.shape()));
  }
  Tensor grad(input_shape);
  const double scale = 1.0 / static_cast<double>(cells);
  for (std::int64_t b = 0; b < n; ++b) {
    float* dst = grad.raw() + b * cells * c;
    for (std::int64_t i = 0; i < cells; ++i) {
      for (std::int64_t ch = 0; ch < c; ++ch) {
        dst[i * c + ch] = static_cast<float>(upstream[b * c + ch] * scale);
      }
    }
  }
  return grad;
}

Tensor dropout_mask(const Shape& shape, double rate, std::uint64_t seed,
                    std::uint64_t call_index) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw InputError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  Tensor mask(shape, 1.0f);
  if (rate == 0.0) return mask;
  const float keep_scale = static_cast<float>(1.0 / (1.0 - rate));
  Rng rng(derive_seed({seed, call_index, 0x64726f70ULL}));
  for (float& m : mask.data()) m = rng.uniform() < rate ? 0.0f : keep_scale;
  return mask;
}

Tensor dropout(const Tensor& input, double rate, std::uint64_t seed,
               std::uint64_t call_index, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw InputError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return input;
  return multiply(input, dropout_mask(input.shape(), rate, seed, call_index));
}

namespace {

void check_channel_stats(const Tensor& input, std::initializer_list<const Tensor*> stats) {
  const std::int64_t channels = input.shape().back();
  for (const Tensor* s : stats) {
    if (s->rank() != 1 || s->dim(0) != channels) {
      throw ShapeError("batchnorm: per-channel tensor " + to_string(s->shape()) +
                       " does not match input " + to_string(input.shape()));
    }
  }
}

}  // namespace

Tensor batchnorm_inference(const Tensor& input, const Tensor& mean, const Tensor& var,
                           const Tensor& gamma, const Tensor& beta, double eps) {
  if (input.rank() < 1) throw ShapeError("batchnorm: scalar input");
  check_channel_stats(input, {&mean, &var, &gamma, &beta});
  const std::int64_t c = input.shape().back();
  std::vector<float> scale(static_cast<std::size_t>(c)), shift(static_cast<std::size_t>(c));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    if (var[ch] < 0.0f) {
      throw InputError("batchnorm: negative variance in channel " + std::to_string(ch));
    }
    const double inv = 1.0 / std::sqrt(static_cast<double>(var[ch]) + eps);
    scale[ch] = static_cast<float>(inv * gamma[ch]);
    shift[ch] = static_cast<float>(beta[ch] - mean[ch] * inv * gamma[ch]);
  }
  Tensor out = zeros_like(input);
  const std::size_t rows = input.size() / static_cast<std::size_t>(c);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* x = input.raw() + r * c;
    float* y = out.raw() + r * c;
    for (std::int64_t ch = 0; ch < c; ++ch) y[ch] = x[ch] * scale[ch] + shift[ch];
  }
  return out;
}

BatchNormGrads batchnorm_inference_backward(const Tensor& input, const Tensor& mean,
                                            const Tensor& var, const Tensor& gamma,
                                            double eps, const Tensor& upstream) {
  require_same_shape(input, upstream, "batchnorm backward");
  const std::int64_t c = input.shape().back();
  std::vector<double> inv(static_cast<std::size_t>(c));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    inv[ch] = 1.0 / std::sqrt(static_cast<double>(var[ch]) + eps);
  }
  BatchNormGrads grads;
  grads.input = zeros_like(input);
  std::vector<double> dgamma(static_cast<std::size_t>(c), 0.0);
  std::vector<double> dbeta(static_cast<std::size_t>(c), 0.0);
  const std::size_t rows = input.size() / static_cast<std::size_t>(c);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* x = input.raw() + r * c;
    const float* g = upstream.raw() + r * c;
    float* dx = grads.input.raw() + r * c;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      dx[ch] = static_cast<float>(g[ch] * gamma[ch] * inv[ch]);
      dgamma[ch] += static_cast<double>(g[ch]) * (x[ch] - mean[ch]) * inv[ch];
      dbeta[ch] += g[ch];
    }
  }
  grads.gamma = Tensor(Shape{c});
  grads.beta = Tensor(Shape{c});
  for (std::int64_t ch = 0; ch < c; ++ch) {
    grads.gamma[ch] = static_cast<float>(dgamma[ch]);
    grads.beta[ch] = static_cast<float>(dbeta[ch]);
  }
  return grads;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  add_inplace(out, b);
  return out;
}

namespace {

bool is_channel_broadcast(const Tensor& a, const Tensor& b) {
  return a.rank() == 4 && b.rank() == 2 && b.dim(0) == a.dim(0) && b.dim(1) == a.dim(3);
}

}  // namespace

Tensor multiply(const Tensor& a, const Tensor& b) {
  Tensor out = zeros_like(a);
  if (a.shape() == b.shape()) {
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
  }
  if (!is_channel_broadcast(a, b)) {
    throw ShapeError("multiply: shapes " + to_string(a.shape()) + " and " +
                     to_string(b.shape()) + " are not compatible");
  }
  const std::int64_t n = a.dim(0), c = a.dim(3), cells = a.dim(1) * a.dim(2);
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t i = 0; i < cells; ++i) {
      const std::int64_t base = (s * cells + i) * c;
      for (std::int64_t ch = 0; ch < c; ++ch) out[base + ch] = a[base + ch] * b[s * c + ch];
    }
  }
  return out;
}

BinaryGrads multiply_backward(const Tensor& a, const Tensor& b, const Tensor& upstream) {
  require_same_shape(a, upstream, "multiply backward");
  BinaryGrads grads;
  grads.a = multiply(upstream, b);
  if (a.shape() == b.shape()) {
    grads.b = multiply(upstream, a);
    return grads;
  }
  const std::int64_t n = a.dim(0), c = a.dim(3), cells = a.dim(1) * a.dim(2);
  grads.b = Tensor(b.shape());
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (std::int64_t i = 0; i < cells; ++i) {
        const std::int64_t idx = (s * cells + i) * c + ch;
        acc += static_cast<double>(upstream[idx]) * a[idx];
      }
      grads.b[s * c + ch] = static_cast<float>(acc);
    }
  }
  return grads;
}

namespace {

void check_loss_inputs(const Tensor& probs, const Tensor& targets) {
  require_rank(probs, 2, "cross_entropy", "probs");
  require_same_shape(probs, targets, "cross_entropy");
  const std::int64_t n = probs.dim(0), k = probs.dim(1);
  for (std::int64_t r = 0; r < n; ++r) {
    double total = 0.0;
    for (std::int64_t j = 0; j < k; ++j) total += probs[r * k + j];
    if (std::abs(total - 1.0) > 1e-5) {
      throw InputError("cross_entropy: probability row " + std::to_string(r) +
                       " sums to " + std::to_string(total));
    }
  }
}

}  // namespace

double cross_entropy(const Tensor& probs, const Tensor& targets) {
  check_loss_inputs(probs, targets);
  const std::int64_t n = probs.dim(0);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (targets[i] == 0.0f) continue;
    const float p = std::clamp(probs[i], kProbabilityFloor, 1.0f);
    total -= static_cast<double>(targets[i]) * std::log(static_cast<double>(p));
  }
  return total / static_cast<double>(n);
}

Tensor cross_entropy_backward(const Tensor& probs, const Tensor& targets, double upstream) {
  check_loss_inputs(probs, targets);
  const double scale = upstream / static_cast<double>(probs.dim(0));
  Tensor grad = zeros_like(probs);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (targets[i] == 0.0f) continue;
    if (probs[i] < kProbabilityFloor || probs[i] > 1.0f) continue;  // clamped: flat
    grad[i] = static_cast<float>(-scale * targets[i] / probs[i]);
  }
  return grad;
}

}  // namespace kernels
}  // namespace tentnet
