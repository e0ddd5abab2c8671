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

#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tentnet::testing {

RefTensor::RefTensor(Shape s, double fill) : shape(std::move(s)) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) n *= d;
  v.assign(static_cast<std::size_t>(n), fill);
}

RefTensor RefTensor::from(const Tensor& t) {
  RefTensor r(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) r.v[i] = t.raw()[i];
  return r;
}

int64_t ref_conv_out(std::int64_t in, std::int64_t k, std::int64_t stride, bool same) {
  if (same) return (in + stride - 1) / stride;
  return (in - k) / stride + 1;
}

namespace {

// Leading pad for "same": total = max((out-1)*s + k - in, 0), top = total/2.
std::int64_t lead(std::int64_t in, std::int64_t k, std::int64_t stride, bool same) {
  if (!same) return 0;
  const std::int64_t out = ref_conv_out(in, k, stride, true);
  return std::max<std::int64_t>((out - 1) * stride + k - in, 0) / 2;
}

}  // namespace

RefTensor ref_conv2d(const RefTensor& x, const RefTensor& kernel, const RefTensor* bias,
                     std::int64_t stride, bool same) {
  const std::int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), cin = x.dim(3);
  const std::int64_t kh = kernel.dim(0), kw = kernel.dim(1), cout = kernel.dim(3);
  const std::int64_t oh = ref_conv_out(h, kh, stride, same), ow = ref_conv_out(w, kw, stride, same);
  const std::int64_t pt = lead(h, kh, stride, same), pl = lead(w, kw, stride, same);
  RefTensor out(Shape{n, oh, ow, cout});
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t oy = 0; oy < oh; ++oy)
      for (std::int64_t ox = 0; ox < ow; ++ox)
        for (std::int64_t co = 0; co < cout; ++co) {
          double acc = bias ? bias->v[static_cast<std::size_t>(co)] : 0.0;
          for (std::int64_t ky = 0; ky < kh; ++ky)
            for (std::int64_t kx = 0; kx < kw; ++kx) {
              const std::int64_t iy = oy * stride + ky - pt, ix = ox * stride + kx - pl;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              for (std::int64_t ci = 0; ci < cin; ++ci) {
                acc += x.v[static_cast<std::size_t>(((b * h + iy) * w + ix) * cin + ci)] *
                       kernel.v[static_cast<std::size_t>(((ky * kw + kx) * cin + ci) * cout + co)];
              }
            }
          out.v[static_cast<std::size_t>(((b * oh + oy) * ow + ox) * cout + co)] = acc;
        }
  return out;
}

RefTensor ref_depthwise(const RefTensor& x, const RefTensor& kernel, const RefTensor* bias,
                        std::int64_t stride, bool same) {
  const std::int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const std::int64_t kh = kernel.dim(0), kw = kernel.dim(1);
  const std::int64_t oh = ref_conv_out(h, kh, stride, same), ow = ref_conv_out(w, kw, stride, same);
  const std::int64_t pt = lead(h, kh, stride, same), pl = lead(w, kw, stride, same);
  RefTensor out(Shape{n, oh, ow, c});
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t oy = 0; oy < oh; ++oy)
      for (std::int64_t ox = 0; ox < ow; ++ox)
        for (std::int64_t ch = 0; ch < c; ++ch) {
          double acc = bias ? bias->v[static_cast<std::size_t>(ch)] : 0.0;
          for (std::int64_t ky = 0; ky < kh; ++ky)
            for (std::int64_t kx = 0; kx < kw; ++kx) {
              const std::int64_t iy = oy * stride + ky - pt, ix = ox * stride + kx - pl;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += x.v[static_cast<std::size_t>(((b * h + iy) * w + ix) * c + ch)] *
                     kernel.v[static_cast<std::size_t>((ky * kw + kx) * c + ch)];
            }
          out.v[static_cast<std::size_t>(((b * oh + oy) * ow + ox) * c + ch)] = acc;
        }
  return out;
}

RefTensor ref_maxpool(const RefTensor& x, std::int64_t window, std::int64_t stride, Decisions* d) {
  const std::int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const std::int64_t oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
  RefTensor out(Shape{n, oh, ow, c});
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t oy = 0; oy < oh; ++oy)
      for (std::int64_t ox = 0; ox < ow; ++ox)
        for (std::int64_t ch = 0; ch < c; ++ch) {
          double best = -INFINITY;
          std::int64_t arg = -1;
          for (std::int64_t ky = 0; ky < window; ++ky)
            for (std::int64_t kx = 0; kx < window; ++kx) {
              const double v = x.v[static_cast<std::size_t>(
                  ((b * h + oy * stride + ky) * w + ox * stride + kx) * c + ch)];
              if (v > best) {
                best = v;
                arg = ky * window + kx;
              }
            }
          out.v[static_cast<std::size_t>(((b * oh + oy) * ow + ox) * c + ch)] = best;
          if (d) d->choices.push_back(arg);
        }
  return out;
}

RefTensor ref_dense(const RefTensor& x, const RefTensor& w, const RefTensor* bias) {
  const std::int64_t n = x.dim(0), din = x.dim(1), dout = w.dim(1);
  RefTensor out(Shape{n, dout});
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t o = 0; o < dout; ++o) {
      double acc = bias ? bias->v[static_cast<std::size_t>(o)] : 0.0;
      for (std::int64_t i = 0; i < din; ++i) {
        acc += x.v[static_cast<std::size_t>(b * din + i)] * w.v[static_cast<std::size_t>(i * dout + o)];
      }
      out.v[static_cast<std::size_t>(b * dout + o)] = acc;
    }
  return out;
}

RefTensor ref_activation(Activation kind, const RefTensor& x, Decisions* d) {
  RefTensor out = x;
  switch (kind) {
    case Activation::kRelu:
      for (double& v : out.v) {
        if (d) d->choices.push_back(v > 0.0);
        v = v > 0.0 ? v : 0.0;
      }
      break;
    case Activation::kSigmoid:
      for (double& v : out.v) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::kSwish:
      for (double& v : out.v) v = v / (1.0 + std::exp(-v));
      break;
    case Activation::kSoftmax: {
      const std::int64_t k = x.shape.back();
      const std::size_t rows = x.size() / static_cast<std::size_t>(k);
      for (std::size_t r = 0; r < rows; ++r) {
        double* row = out.v.data() + r * static_cast<std::size_t>(k);
        double total = 0.0;
        for (std::int64_t j = 0; j < k; ++j) total += std::exp(row[j]);
        for (std::int64_t j = 0; j < k; ++j) row[j] = std::exp(row[j]) / total;
      }
      break;
    }
  }
  return out;
}

RefTensor ref_gap(const RefTensor& x) {
  const std::int64_t n = x.dim(0), hw = x.dim(1) * x.dim(2), c = x.dim(3);
  RefTensor out(Shape{n, c});
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t p = 0; p < hw; ++p)
      for (std::int64_t ch = 0; ch < c; ++ch) {
        out.v[static_cast<std::size_t>(b * c + ch)] +=
            x.v[static_cast<std::size_t>((b * hw + p) * c + ch)] / static_cast<double>(hw);
      }
  return out;
}

RefTensor ref_batchnorm(const RefTensor& x, const RefTensor& mean, const RefTensor& var,
                        const RefTensor& gamma, const RefTensor& beta, double eps) {
  RefTensor out = x;
  const std::size_t c = mean.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t ch = i % c;
    out.v[i] = gamma.v[ch] * (x.v[i] - mean.v[ch]) / std::sqrt(var.v[ch] + eps) + beta.v[ch];
  }
  return out;
}

RefTensor ref_add(const RefTensor& a, const RefTensor& b) {
  RefTensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += b.v[i];
  return out;
}

RefTensor ref_multiply(const RefTensor& a, const RefTensor& b) {
  RefTensor out = a;
  if (a.shape == b.shape) {
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= b.v[i];
    return out;
  }
  // b is (n,c) against a (n,h,w,c).
  const std::int64_t n = a.dim(0), hw = a.dim(1) * a.dim(2), c = a.dim(3);
  for (std::int64_t s = 0; s < n; ++s)
    for (std::int64_t p = 0; p < hw; ++p)
      for (std::int64_t ch = 0; ch < c; ++ch) {
        out.v[static_cast<std::size_t>((s * hw + p) * c + ch)] *= b.v[static_cast<std::size_t>(s * c + ch)];
      }
  return out;
}

RefTensor ref_flatten(const RefTensor& x) {
  RefTensor out = x;
  out.shape = Shape{x.dim(0), static_cast<std::int64_t>(x.size()) / x.dim(0)};
  return out;
}

double ref_cross_entropy(const RefTensor& probs, const RefTensor& targets, Decisions* d) {
  const std::int64_t n = probs.dim(0);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool clamped = probs.v[i] < 1e-7;
    if (d) d->choices.push_back(clamped);
    const double p = clamped ? 1e-7 : std::min(probs.v[i], 1.0);
    total -= targets.v[i] * std::log(p);
  }
  return total / static_cast<double>(n);
}

double ref_l2(const std::vector<const RefTensor*>& weights) {
  double total = 0.0;
  for (const RefTensor* w : weights)
    for (double v : w->v) total += v * v;
  return total;
}

RefTensor ref_forward(const ModelGraph& graph, const std::map<std::string, RefTensor>& params,
                      const RefTensor& batch, const std::vector<RefTensor>& dropout_masks,
                      Decisions* d) {
  std::map<std::string, RefTensor> out;
  std::size_t dropout_index = 0;
  auto param = [&](const std::string& layer, const char* role) -> const RefTensor* {
    auto it = params.find(layer + "/" + role);
    return it == params.end() ? nullptr : &it->second;
  };
  RefTensor last;
  for (const LayerSpec& layer : graph.layers()) {
    auto in = [&](std::size_t i) -> const RefTensor& { return out.at(layer.inputs.at(i)); };
    switch (layer.kind()) {
      case LayerKind::kInput: {
        last = batch;
        if (graph.normalization()) {
          const auto& norm = *graph.normalization();
          for (std::size_t i = 0; i < last.size(); ++i) {
            const std::size_t ch = i % norm.mean.size();
            last.v[i] = (last.v[i] - static_cast<double>(norm.mean[ch])) / static_cast<double>(norm.std[ch]);
          }
        }
        break;
      }
      case LayerKind::kConv2d: {
        const auto& p = std::get<Conv2dParams>(layer.params);
        last = ref_conv2d(in(0), *param(layer.name, "kernel"), param(layer.name, "bias"), p.stride,
                          p.padding == Padding::kSame);
        break;
      }
      case LayerKind::kDepthwiseConv2d: {
        const auto& p = std::get<DepthwiseConv2dParams>(layer.params);
        last = ref_depthwise(in(0), *param(layer.name, "depthwise_kernel"), param(layer.name, "bias"),
                             p.stride, p.padding == Padding::kSame);
        break;
      }
      case LayerKind::kMaxPool2d: {
        const auto& p = std::get<MaxPool2dParams>(layer.params);
        last = ref_maxpool(in(0), p.window, p.stride, d);
        break;
      }
      case LayerKind::kDense:
        last = ref_dense(in(0).shape.size() > 2 ? ref_flatten(in(0)) : in(0),
                         *param(layer.name, "kernel"), param(layer.name, "bias"));
        break;
      case LayerKind::kActivation:
        last = ref_activation(std::get<ActivationParams>(layer.params).function, in(0), d);
        break;
      case LayerKind::kGlobalAvgPool:
        last = ref_gap(in(0));
        break;
      case LayerKind::kDropout:
        last = dropout_index < dropout_masks.size()
                   ? ref_multiply(in(0), dropout_masks[dropout_index])
                   : in(0);
        ++dropout_index;
        break;
      case LayerKind::kBatchNorm:
        last = ref_batchnorm(in(0), *param(layer.name, "moving_mean"),
                             *param(layer.name, "moving_variance"), *param(layer.name, "gamma"),
                             *param(layer.name, "beta"), std::get<BatchNormParams>(layer.params).eps);
        break;
      case LayerKind::kAdd:
        last = ref_add(in(0), in(1));
        break;
      case LayerKind::kMultiply:
        last = ref_multiply(in(0), in(1));
        break;
      case LayerKind::kFlatten:
        last = ref_flatten(in(0));
        break;
    }
    out[layer.name] = last;
  }
  return last;
}

}  // namespace tentnet::testing
