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

#ifndef TATT_ATTENTION_H_
#define TATT_ATTENTION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tatt/position.h"
#include "tatt/tensor.h"
#include "tatt/tensor_ops.h"

namespace tatt {

// Per-dimension attention masks M_i. Each entry is absent (all allowed),
// shared ([n_i, n_i], applied to every fiber) or batched
// ([prod_{j != i} n_j, n_i, n_i], one mask per fiber).
class DimMask {
 public:
  explicit DimMask(std::size_t order) : per_dim_(order) {}

  static DimMask None(std::size_t order) { return DimMask(order); }

  // Lower-triangular mask within every dimension. This is hierarchical
  // causality: token t sees token s iff s_i <= t_i on every dimension,
  // which is stricter than sequence causality s <= t.
  static DimMask HierarchicalCausal(const TensorizationScheme& scheme);

  void Set(std::size_t dim, BoolTensor mask);
  void Clear(std::size_t dim);

  std::size_t order() const { return per_dim_.size(); }
  const BoolTensor* ForDim(std::size_t dim) const;

  // Shapes must match the scheme; under kStrict every (fiber, row) needs an
  // allowed column.
  void Validate(const TensorizationScheme& scheme, MaskPolicy policy) const;

 private:
  std::vector<std::optional<BoolTensor>> per_dim_;
};

struct AttentionOptions {
  MaskPolicy policy = MaskPolicy::kStrict;
  std::optional<RopeConfig> rope;
  // Dimension visited at each stage. Empty means ascending 0..m-1.
  std::vector<std::size_t> update_order;
  std::size_t threads = 1;
};

// Saved forward state, indexed by stage (see update_order).
struct AttentionIntermediates {
  std::vector<std::size_t> update_order;
  std::vector<Tensor> weights;  // A per stage: [prod_{j != i} n_j, n_i, n_i]
  std::vector<Tensor> queries;  // mode-i flattened (and rotated) Q per stage
  std::vector<Tensor> keys;     // same for K
  std::vector<Tensor> values;   // O^(0) = V .. O^(m) = output, tensor shape
};

struct AttentionResult {
  Tensor output;  // [n_1, .., n_m, d]
  AttentionIntermediates intermediates;
};

struct AttentionGradients {
  Tensor dq, dk, dv;
};

// Reference softmax(q k^T / sqrt(d) o M) v on [n, d] inputs. Processes query
// rows in blocks so the n x n score matrix is never materialized.
Tensor FullAttention(const Tensor& q, const Tensor& k, const Tensor& v,
                     const BoolTensor* mask = nullptr,
                     MaskPolicy policy = MaskPolicy::kStrict);

// Sequential per-dimension attention. Q, K, V: [n_1, .., n_m, d].
// For each stage: flatten Q, K, O along the stage's dimension, form the
// batched A = softmax(Q_i K_i^T / sqrt(d) o M_i), update O_i <- A O_i and
// fold back. Score blocks are computed in tiles of at most 64 x 64.
AttentionResult TensorizedAttentionForward(const Tensor& q, const Tensor& k,
                                           const Tensor& v,
                                           const TensorizationScheme& scheme,
                                           const DimMask& masks,
                                           const AttentionOptions& options = {});

inline constexpr std::size_t kCompositeMaxLength = 4096;

// The n x n matrix the whole forward applies to vec(V) (one feature column
// at a time): each stage's batched weights scattered to global token index
// pairs, multiplied last stage leftmost. Throws SizeGuardError for
// n > kCompositeMaxLength.
Tensor CompositeOperator(const Tensor& q, const Tensor& k,
                         const TensorizationScheme& scheme,
                         const DimMask& masks,
                         const AttentionOptions& options = {});

// Exact gradients of TensorizedAttentionForward given upstream dO and the
// intermediates saved by the matching forward call.
AttentionGradients TensorizedAttentionBackward(
    const Tensor& d_output, const Tensor& q, const Tensor& k, const Tensor& v,
    const AttentionIntermediates& inter, const TensorizationScheme& scheme,
    const DimMask& masks, const AttentionOptions& options = {});

enum class AttentionVariant { kFull, kTensorized };

// Multiply counts for the three attention steps.
struct FlopCount {
  std::uint64_t scores = 0;
  std::uint64_t softmax = 0;
  std::uint64_t update = 0;

  std::uint64_t total() const { return scores + softmax + update; }
  friend bool operator==(const FlopCount&, const FlopCount&) = default;
};

// full: n^2 d, n^2, n^2 d.
// tensorized: sum_i n n_i d, sum_i n n_i, sum_i n n_i d.
FlopCount FlopEstimate(const TensorizationScheme& scheme,
                       AttentionVariant variant);

}  // namespace tatt

#endif  // TATT_ATTENTION_H_
