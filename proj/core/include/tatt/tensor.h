// Copyright 2026 The tatt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TATT_TENSOR_H_
#define TATT_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tatt/errors.h"

namespace tatt {

using Shape = std::vector<std::size_t>;

std::size_t ShapeProduct(std::span<const std::size_t> shape);
std::string ShapeToString(std::span<const std::size_t> shape);

// Row-major strides, last axis contiguous.
Shape RowMajorStrides(std::span<const std::size_t> shape);

// Dense row-major array. Rank >= 1, every extent >= 1, and
// data().size() == product of extents.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() : shape_{1}, data_(1, T{}) {}

  explicit BasicTensor(Shape shape, T fill = T{})
      : shape_(std::move(shape)) {
    Validate(shape_);
    data_.assign(ShapeProduct(shape_), fill);
  }

  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    Validate(shape_);
    if (data_.size() != ShapeProduct(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + ShapeToString(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  std::size_t Offset(std::span<const std::size_t> coords) const {
    if (coords.size() != shape_.size()) {
      throw IndexError("coordinate rank mismatch");
    }
    std::size_t offset = 0;
    for (std::size_t a = 0; a < shape_.size(); ++a) {
      if (coords[a] >= shape_[a]) throw IndexError("coordinate out of range");
      offset = offset * shape_[a] + coords[a];
    }
    return offset;
  }

  T& at(std::initializer_list<std::size_t> coords) {
    return data_[Offset(std::span(coords.begin(), coords.size()))];
  }
  const T& at(std::initializer_list<std::size_t> coords) const {
    return data_[Offset(std::span(coords.begin(), coords.size()))];
  }
  T& at(std::span<const std::size_t> coords) { return data_[Offset(coords)]; }
  const T& at(std::span<const std::size_t> coords) const {
    return data_[Offset(coords)];
  }

  // Metadata-only reshape; the flat data is untouched.
  BasicTensor Reshaped(Shape new_shape) const& {
    BasicTensor out = *this;
    out.Reshape(std::move(new_shape));
    return out;
  }
  BasicTensor Reshaped(Shape new_shape) && {
    Reshape(std::move(new_shape));
    return std::move(*this);
  }

  void Reshape(Shape new_shape) {
    Validate(new_shape);
    if (ShapeProduct(new_shape) != data_.size()) {
      throw ShapeError("cannot reshape " + ShapeToString(shape_) + " to " +
                       ShapeToString(new_shape));
    }
    shape_ = std::move(new_shape);
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  static void Validate(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor rank must be >= 1");
    for (std::size_t e : shape) {
      if (e == 0) throw ShapeError("tensor extents must be >= 1");
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<double>;
using BoolTensor = BasicTensor<std::uint8_t>;

// Factorization {n_1..n_m} of a sequence length plus the feature width d.
class TensorizationScheme {
 public:
  TensorizationScheme(std::vector<std::size_t> dims, std::size_t feature_dim);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t sequence_length() const { return length_; }

  // Number of mode-i fibers, prod_{j != i} n_j.
  std::size_t batch(std::size_t i) const;

  // [n_1, .., n_m, d]
  Shape tensor_shape() const;

  std::string ToString() const;

  friend bool operator==(const TensorizationScheme&,
                         const TensorizationScheme&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::size_t feature_dim_;
  std::size_t length_;
};

// Parses "4,4,4" (also accepts 'x' separators).
std::vector<std::size_t> ParseDims(const std::string& text);

// Splits n into m = ceil(log2(n) / log2(max_block)) extents as evenly as the
// prime factorization allows (largest factors assigned first to the smallest
// extent). n = 1 gives {1}.
std::vector<std::size_t> BalancedDims(std::size_t n, std::size_t max_block = 16);

}  // namespace tatt

#endif  // TATT_TENSOR_H_
