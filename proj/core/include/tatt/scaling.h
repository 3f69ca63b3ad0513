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

#ifndef TATT_SCALING_H_
#define TATT_SCALING_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "tatt/attention.h"

namespace tatt {

struct ScalingPoint {
  AttentionVariant variant = AttentionVariant::kFull;
  std::size_t n = 0;
  std::vector<std::size_t> dims;
  std::size_t d = 0;
  std::size_t reps = 0;
  double median_seconds = 0.0;
  std::uint64_t flops = 0;  // FlopEstimate(...).total()
};

struct ScalingOptions {
  std::size_t d = 16;
  std::size_t reps = 5;
  std::uint64_t seed = 0;
  std::size_t max_block = 16;  // balanced-dims policy
  std::size_t threads = 1;
  bool full = true;
  bool tensorized = true;
};

// Times single-head forward passes (no mask) at each length. Full attention
// runs on [n, d]; tensorized on BalancedDims(n, max_block). Throws Error for
// reps < 3.
std::vector<ScalingPoint> MeasureScaling(std::span<const std::size_t> lengths,
                                         const ScalingOptions& options);

// Least-squares slope of log(seconds) against log(n) for one variant; empty
// with fewer than two distinct lengths.
std::optional<double> LogLogSlope(std::span<const ScalingPoint> points,
                                  AttentionVariant variant);

const char* VariantName(AttentionVariant variant);

// Header: variant,n,dims,d,reps,median_seconds,flop_estimate,slope
// Trailing rows carry only variant and slope.
void WriteScalingCsv(std::ostream& os, std::span<const ScalingPoint> points);

}  // namespace tatt

#endif  // TATT_SCALING_H_
