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

#ifndef TATT_TENSOR_OPS_H_
#define TATT_TENSOR_OPS_H_

#include <cstddef>
#include <span>

#include "tatt/tensor.h"

namespace tatt {

// Strict: a fully masked softmax row throws MaskError.
// Permissive: such a row becomes all zeros.
enum class MaskPolicy { kStrict, kPermissive };

// [n, d] -> [n_1, .., n_m, d]. Pure reshape; token t lands at its
// mixed-radix coordinates with dimension 1 most significant.
Tensor Tensorize(const Tensor& seq, const TensorizationScheme& scheme);

// Inverse of Tensorize: [n_1, .., n_m, d] -> [n, d].
Tensor Sequentialize(const Tensor& t);

// Mode-i flattening of a tensor whose first `order` axes are the tensor
// dimensions. An optional single trailing axis is the feature axis; when it
// is absent d = 1. Output is [prod_{j != i} n_j, n_i, d], with the batch
// index enumerating the remaining dimensions in row-major order.
Tensor ModeFlatten(const Tensor& t, std::size_t mode, std::size_t order);

// Convenience: order = rank - 1 (trailing feature axis present).
inline Tensor ModeFlatten(const Tensor& t, std::size_t mode) {
  return ModeFlatten(t, mode, t.rank() - 1);
}

// Exact inverse of ModeFlatten for the given target shape.
Tensor ModeFold(const Tensor& flat, std::size_t mode,
                std::span<const std::size_t> target_shape, std::size_t order);

// out[b] = a[b] * b[b] for a: [B, p, q], b: [B, q, r].
Tensor BatchedMatmul(const Tensor& a, const Tensor& b);

// out[b] = a[b] * b[b]^T for a: [B, p, q], b: [B, r, q].
Tensor BatchedMatmulTransB(const Tensor& a, const Tensor& b);

// out[b] = a[b]^T * b[b] for a: [B, q, p], b: [B, q, r].
Tensor BatchedMatmulTransA(const Tensor& a, const Tensor& b);

// Softmax over the last axis with max subtraction. `mask`, when given,
// must have a shape equal to a suffix of t's shape (it is broadcast over the
// leading axes); zero entries are excluded and come out exactly 0.
Tensor SoftmaxLastAxis(const Tensor& t, const BoolTensor* mask = nullptr,
                       MaskPolicy policy = MaskPolicy::kStrict);

double MaxAbsDiff(const Tensor& a, const Tensor& b);

namespace detail {

// In-place masked softmax of one row. `allow` may be null. Returns false
// for a fully masked row, which is left zeroed.
bool SoftmaxRow(double* row, const std::uint8_t* allow, std::size_t cols);

}  // namespace detail

}  // namespace tatt

#endif  // TATT_TENSOR_OPS_H_
