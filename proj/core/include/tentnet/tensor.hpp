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

#ifndef TENTNET_TENSOR_HPP_
#define TENTNET_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tentnet {

using Shape = std::vector<std::int64_t>;

std::int64_t num_elements(const Shape& shape);
std::string to_string(const Shape& shape);

// Dense row-major float32 array. Image tensors use NHWC (or HWC for a single
// image without the batch axis).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor scalar(float value) { return Tensor(Shape{}, {value}); }

  const Shape& shape() const { return shape_; }
  std::int64_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  float* raw() { return data_.data(); }
  const float* raw() const { return data_.data(); }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // Scalar value of a one-element tensor.
  float item() const;

  // Same data, new shape with the same element count.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

// Elementwise helpers used by the optimizer, the tape and the tests.
Tensor zeros_like(const Tensor& t);
void add_inplace(Tensor& target, const Tensor& addend);

// Stacks equally shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> items);

// Content hash of raw float bits (shape included).
std::uint64_t hash_tensor(const Tensor& t, std::uint64_t seed = 0);

}  // namespace tentnet

#endif  // TENTNET_TENSOR_HPP_
