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

#ifndef TATT_POSITION_H_
#define TATT_POSITION_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tatt/tensor.h"

namespace tatt {

enum class RopeMode {
  kSequential,    // rotate by the linear token index
  kPerDimension,  // rotate mode-i fibers by the dim-i coordinate
};

// Every tensor dimension reuses the full frequency bank
// theta_j = base^(-2j / head_dim) over the whole head dimension.
struct RopeConfig {
  double base = 10000.0;
  std::size_t head_dim = 0;
  RopeMode mode = RopeMode::kPerDimension;

  void Validate() const;
};

enum class RopeDirection { kForward, kInverse };

// Mixed-radix coordinates of a token, dimension 1 most significant.
struct PositionCoords {
  std::vector<std::size_t> coords;

  friend bool operator==(const PositionCoords&,
                         const PositionCoords&) = default;
};

// Indices beyond prod n_i spill into coords[0].
PositionCoords LinearToCoords(std::size_t t, std::span<const std::size_t> dims);
std::size_t CoordsToLinear(const PositionCoords& p,
                           std::span<const std::size_t> dims);

// Rotates interleaved pairs (x[2j], x[2j+1]) of the last axis by
// positions[l] * theta_j, where l indexes the second-to-last axis.
// x: [.., L, d], positions.size() == L, d even.
Tensor ApplyRope(const Tensor& x, std::span<const std::int64_t> positions,
                 const RopeConfig& cfg,
                 RopeDirection dir = RopeDirection::kForward);

// Per-dimension rotary encoding of mode-i flattened queries and keys
// ([B, n_i, d]): positions 0..n_i-1 along the fiber, shared by the batch.
std::pair<Tensor, Tensor> ApplyTensorizedRope(
    const Tensor& q_flat, const Tensor& k_flat, std::size_t dim,
    const TensorizationScheme& scheme, const RopeConfig& cfg,
    RopeDirection dir = RopeDirection::kForward);

// Token capacity after extending dimension `dim` by `extra` positions:
// (n_i + extra) * prod_{j != i} n_j.
std::size_t EffectiveLength(std::span<const std::size_t> dims, std::size_t dim,
                            std::size_t extra);

// Order in which dimensions receive extra positions when a context grows.
class ExtrapolationPolicy {
 public:
  explicit ExtrapolationPolicy(std::vector<std::size_t> order);

  // Last (lowest-level) dimension first, then towards dimension 1.
  static ExtrapolationPolicy LowerToHigher(std::size_t order);
  static ExtrapolationPolicy HigherToLower(std::size_t order);

  const std::vector<std::size_t>& order() const { return order_; }

 private:
  std::vector<std::size_t> order_;
};

struct GrowthStep {
  std::size_t dim;
  std::vector<std::size_t> dims;  // after this step
  std::size_t capacity;
};

// Each round adds one position to the next dimension of the policy order,
// cycling through it.
std::vector<GrowthStep> SimulateGrowth(std::span<const std::size_t> dims,
                                       const ExtrapolationPolicy& policy,
                                       std::size_t rounds);

}  // namespace tatt

#endif  // TATT_POSITION_H_
