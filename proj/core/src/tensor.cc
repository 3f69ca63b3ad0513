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

#include "tatt/tensor.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace tatt {

std::size_t ShapeProduct(std::span<const std::size_t> shape) {
  std::size_t p = 1;
  for (std::size_t e : shape) p *= e;
  return p;
}

std::string ShapeToString(std::span<const std::size_t> shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (a) os << ',';
    os << shape[a];
  }
  os << ']';
  return os.str();
}

Shape RowMajorStrides(std::span<const std::size_t> shape) {
  Shape strides(shape.size(), 1);
  for (std::size_t a = shape.size(); a-- > 1;) {
    strides[a - 1] = strides[a] * shape[a];
  }
  return strides;
}

TensorizationScheme::TensorizationScheme(std::vector<std::size_t> dims,
                                         std::size_t feature_dim)
    : dims_(std::move(dims)), feature_dim_(feature_dim), length_(1) {
  if (dims_.empty()) throw ShapeError("scheme needs at least one dimension");
  if (feature_dim_ == 0) throw ShapeError("feature dimension must be >= 1");
  for (std::size_t n : dims_) {
    if (n == 0) throw ShapeError("scheme extents must be >= 1");
    length_ *= n;
  }
}

std::size_t TensorizationScheme::batch(std::size_t i) const {
  if (i >= dims_.size()) throw IndexError("dimension index out of range");
  return length_ / dims_[i];
}

Shape TensorizationScheme::tensor_shape() const {
  Shape s = dims_;
  s.push_back(feature_dim_);
  return s;
}

std::string TensorizationScheme::ToString() const {
  std::ostringstream os;
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    if (a) os << 'x';
    os << dims_[a];
  }
  return os.str();
}

std::vector<std::size_t> ParseDims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::string token;
  auto flush = [&] {
    if (token.empty()) throw ShapeError("empty extent in '" + text + "'");
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(token, &pos);
    } catch (const std::exception&) {
      throw ShapeError("bad extent '" + token + "'");
    }
    if (pos != token.size() || v == 0) {
      throw ShapeError("bad extent '" + token + "'");
    }
    dims.push_back(static_cast<std::size_t>(v));
    token.clear();
  };
  for (char c : text) {
    if (c == ',' || c == 'x' || c == 'X') {
      flush();
    } else if (c != ' ') {
      token.push_back(c);
    }
  }
  flush();
  return dims;
}

std::vector<std::size_t> BalancedDims(std::size_t n, std::size_t max_block) {
  if (n == 0) throw ShapeError("sequence length must be >= 1");
  if (max_block < 2) throw Error("max_block must be >= 2");
  if (n == 1) return {1};
  std::vector<std::size_t> primes;
  std::size_t rest = n;
  for (std::size_t p = 2; p * p <= rest; ++p) {
    while (rest % p == 0) {
      primes.push_back(p);
      rest /= p;
    }
  }
  if (rest > 1) primes.push_back(rest);
  std::sort(primes.begin(), primes.end(), std::greater<>());
  const double order = std::ceil(std::log2(static_cast<double>(n)) /
                                 std::log2(static_cast<double>(max_block)) - 1e-12);
  const std::size_t m =
      std::min(primes.size(), std::max<std::size_t>(1, static_cast<std::size_t>(order)));
  std::vector<std::size_t> dims(m, 1);
  for (std::size_t p : primes) {
    *std::min_element(dims.begin(), dims.end()) *= p;
  }
  std::sort(dims.begin(), dims.end(), std::greater<>());
  return dims;
}

}  // namespace tatt
