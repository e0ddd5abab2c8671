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

#ifndef TENTNET_ERROR_HPP_
#define TENTNET_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace tentnet {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or layer shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied data is unusable: missing files, malformed manifests,
// inconsistent datasets, bad configuration values.
class InputError : public Error {
 public:
  using Error::Error;
};

// A forward op produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace tentnet

#endif  // TENTNET_ERROR_HPP_
