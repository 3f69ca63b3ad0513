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

#include "tatt/tensor_ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tatt {

namespace {

struct FlattenGeometry {
  std::size_t outer = 1;  // prod_{j < i} n_j
  std::size_t extent = 1;  // n_i
  std::size_t inner = 1;  // prod_{j > i} n_j
  std::size_t features = 1;
};

FlattenGeometry Geometry(std::span<const std::size_t> shape, std::size_t mode,
                         std::size_t order) {
  if (order == 0 || order > shape.size() || shape.size() > order + 1) {
    throw ShapeError("tensor of shape " + ShapeToString(shape) +
                     " is not an order-" + std::to_string(order) +
                     " tensor with optional feature axis");
  }
  if (mode >= order) {
    throw IndexError("mode " + std::to_string(mode) +
                     " out of range for order " + std::to_string(order));
  }
  FlattenGeometry g;
  for (std::size_t j = 0; j < mode; ++j) g.outer *= shape[j];
  g.extent = shape[mode];
  for (std::size_t j = mode + 1; j < order; ++j) g.inner *= shape[j];
  g.features = shape.size() == order + 1 ? shape[order] : 1;
  return g;
}

void RequireRank3(const Tensor& t, const char* what) {
  if (t.rank() != 3) {
    throw ShapeError(std::string(what) + " must be rank 3, got " +
                     ShapeToString(t.shape()));
  }
}

}  // namespace

Tensor Tensorize(const Tensor& seq, const TensorizationScheme& scheme) {
  if (seq.rank() != 2) {
    throw ShapeError("tensorize expects [n, d], got " +
                     ShapeToString(seq.shape()));
  }
  if (seq.extent(0) != scheme.sequence_length()) {
    throw ShapeError("sequence length " + std::to_string(seq.extent(0)) +
                     " does not factor as " + scheme.ToString());
  }
  if (seq.extent(1) != scheme.feature_dim()) {
    throw ShapeError("feature width " + std::to_string(seq.extent(1)) +
                     " does not match scheme width " +
                     std::to_string(scheme.feature_dim()));
  }
  Shape shape = scheme.dims();
  shape.push_back(seq.extent(1));
  return seq.Reshaped(std::move(shape));
}

Tensor Sequentialize(const Tensor& t) {
  const std::size_t d = t.shape().back();
  return t.Reshaped({t.size() / d, d});
}

Tensor ModeFlatten(const Tensor& t, std::size_t mode, std::size_t order) {
  const FlattenGeometry g = Geometry(t.shape(), mode, order);
  Tensor out({g.outer * g.inner, g.extent, g.features});
  const double* src = t.data().data();
  double* dst = out.data().data();
  // Source layout [outer, extent, inner, features];
  // destination [outer * inner, extent, features].
  for (std::size_t a = 0; a < g.outer; ++a) {
    for (std::size_t k = 0; k < g.extent; ++k) {
      for (std::size_t c = 0; c < g.inner; ++c) {
        const double* s = src + ((a * g.extent + k) * g.inner + c) * g.features;
        double* o = dst + ((a * g.inner + c) * g.extent + k) * g.features;
        std::copy_n(s, g.features, o);
      }
    }
  }
  return out;
}

Tensor ModeFold(const Tensor& flat, std::size_t mode,
                std::span<const std::size_t> target_shape, std::size_t order) {
  const FlattenGeometry g = Geometry(target_shape, mode, order);
  if (flat.rank() != 3 || flat.extent(0) != g.outer * g.inner ||
      flat.extent(1) != g.extent || flat.extent(2) != g.features) {
    throw ShapeError("cannot fold " + ShapeToString(flat.shape()) +
                     " at mode " + std::to_string(mode) + " into " +
                     ShapeToString(target_shape));
  }
  Tensor out(Shape(target_shape.begin(), target_shape.end()));
  const double* src = flat.data().data();
  double* dst = out.data().data();
  for (std::size_t a = 0; a < g.outer; ++a) {
    for (std::size_t k = 0; k < g.extent; ++k) {
      for (std::size_t c = 0; c < g.inner; ++c) {
        const double* s = src + ((a * g.inner + c) * g.extent + k) * g.features;
        double* o = dst + ((a * g.extent + k) * g.inner + c) * g.features;
        std::copy_n(s, g.features, o);
      }
    }
  }
  return out;
}

Tensor BatchedMatmul(const Tensor& a, const Tensor& b) {
  RequireRank3(a, "batched_matmul lhs");
  RequireRank3(b, "batched_matmul rhs");
  const std::size_t batch = a.extent(0), p = a.extent(1), q = a.extent(2);
  if (b.extent(0) != batch || b.extent(1) != q) {
    throw ShapeError("batched_matmul shape mismatch " +
                     ShapeToString(a.shape()) + " x " +
                     ShapeToString(b.shape()));
  }
  const std::size_t r = b.extent(2);
  Tensor out({batch, p, r});
  for (std::size_t n = 0; n < batch; ++n) {
    const double* A = a.data().data() + n * p * q;
    const double* B = b.data().data() + n * q * r;
    double* C = out.data().data() + n * p * r;
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t k = 0; k < q; ++k) {
        const double aik = A[i * q + k];
        const double* brow = B + k * r;
        double* crow = C + i * r;
        for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
      }
    }
  }
  return out;
}

Tensor BatchedMatmulTransB(const Tensor& a, const Tensor& b) {
  RequireRank3(a, "batched_matmul lhs");
  RequireRank3(b, "batched_matmul rhs");
  const std::size_t batch = a.extent(0), p = a.extent(1), q = a.extent(2);
  if (b.extent(0) != batch || b.extent(2) != q) {
    throw ShapeError("batched_matmul_transb shape mismatch " +
                     ShapeToString(a.shape()) + " x " +
                     ShapeToString(b.shape()) + "^T");
  }
  const std::size_t r = b.extent(1);
  Tensor out({batch, p, r});
  for (std::size_t n = 0; n < batch; ++n) {
    const double* A = a.data().data() + n * p * q;
    const double* B = b.data().data() + n * r * q;
    double* C = out.data().data() + n * p * r;
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < q; ++k) acc += A[i * q + k] * B[j * q + k];
        C[i * r + j] = acc;
      }
    }
  }
  return out;
}

Tensor BatchedMatmulTransA(const Tensor& a, const Tensor& b) {
  RequireRank3(a, "batched_matmul lhs");
  RequireRank3(b, "batched_matmul rhs");
  const std::size_t batch = a.extent(0), q = a.extent(1), p = a.extent(2);
  if (b.extent(0) != batch || b.extent(1) != q) {
    throw ShapeError("batched_matmul_transa shape mismatch " +
                     ShapeToString(a.shape()) + "^T x " +
                     ShapeToString(b.shape()));
  }
  const std::size_t r = b.extent(2);
  Tensor out({batch, p, r});
  for (std::size_t n = 0; n < batch; ++n) {
    const double* A = a.data().data() + n * q * p;
    const double* B = b.data().data() + n * q * r;
    double* C = out.data().data() + n * p * r;
    for (std::size_t k = 0; k < q; ++k) {
      for (std::size_t i = 0; i < p; ++i) {
        const double aki = A[k * p + i];
        const double* brow = B + k * r;
        double* crow = C + i * r;
        for (std::size_t j = 0; j < r; ++j) crow[j] += aki * brow[j];
      }
    }
  }
  return out;
}

Tensor SoftmaxLastAxis(const Tensor& t, const BoolTensor* mask,
                       MaskPolicy policy) {
  const std::size_t cols = t.shape().back();
  const std::size_t rows = t.size() / cols;
  if (mask != nullptr) {
    const Shape& ms = mask->shape();
    const Shape& ts = t.shape();
    bool suffix = ms.size() <= ts.size();
    for (std::size_t a = 0; suffix && a < ms.size(); ++a) {
      suffix = ms[ms.size() - 1 - a] == ts[ts.size() - 1 - a];
    }
    if (!suffix) {
      throw ShapeError("mask " + ShapeToString(ms) +
                       " is not broadcastable to " + ShapeToString(ts));
    }
  }
  const std::size_t mask_rows = mask ? mask->size() / cols : 1;

  Tensor out = t;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t* allow =
        mask ? mask->data().data() + (r % mask_rows) * cols : nullptr;
    if (!detail::SoftmaxRow(out.data().data() + r * cols, allow, cols) &&
        policy == MaskPolicy::kStrict) {
      throw MaskError("softmax row " + std::to_string(r) + " is fully masked");
    }
  }
  return out;
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw ShapeError("max_abs_diff size mismatch");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = std::abs(a[i] - b[i]);
    if (std::isnan(diff)) return diff;
    m = std::max(m, diff);
  }
  return m;
}

namespace detail {

bool SoftmaxRow(double* row, const std::uint8_t* allow, std::size_t cols) {
  double mx = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t c = 0; c < cols; ++c) {
    if (!allow || allow[c]) {
      any = true;
      mx = std::max(mx, row[c]);
    }
  }
  if (!any) {
    std::fill_n(row, cols, 0.0);
    return false;
  }
  if (!std::isfinite(mx)) {
    // Non-finite scores poison the row instead of reading as masked.
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = !allow || allow[c] ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    }
    return true;
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    if (!allow || allow[c]) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    } else {
      row[c] = 0.0;
    }
  }
  const double inv = 1.0 / sum;
  for (std::size_t c = 0; c < cols; ++c) row[c] *= inv;
  return true;
}

}  // namespace detail

}  // namespace tatt
