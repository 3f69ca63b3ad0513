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

#include "tatt/position.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace tatt {

void RopeConfig::Validate() const {
  if (head_dim == 0 || head_dim % 2 != 0) {
    throw ShapeError("RoPE head_dim must be even and positive, got " +
                     std::to_string(head_dim));
  }
  if (!(base > 1.0)) throw Error("RoPE base must exceed 1");
}

PositionCoords LinearToCoords(std::size_t t,
                              std::span<const std::size_t> dims) {
  PositionCoords p;
  p.coords.assign(dims.size(), 0);
  for (std::size_t i = dims.size(); i-- > 1;) {
    p.coords[i] = t % dims[i];
    t /= dims[i];
  }
  if (!dims.empty()) p.coords[0] = t;
  return p;
}

std::size_t CoordsToLinear(const PositionCoords& p,
                           std::span<const std::size_t> dims) {
  if (p.coords.size() != dims.size()) {
    throw IndexError("coordinate vector length does not match scheme");
  }
  std::size_t t = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i > 0 && p.coords[i] >= dims[i]) {
      throw IndexError("coordinate out of range on dimension " +
                       std::to_string(i));
    }
    t = t * dims[i] + p.coords[i];
  }
  return t;
}

Tensor ApplyRope(const Tensor& x, std::span<const std::int64_t> positions,
                 const RopeConfig& cfg, RopeDirection dir) {
  cfg.Validate();
  if (x.rank() < 2) throw ShapeError("RoPE input needs shape [.., L, d]");
  const std::size_t d = x.shape().back();
  const std::size_t len = x.shape()[x.rank() - 2];
  if (d != cfg.head_dim) {
    throw ShapeError("RoPE head_dim " + std::to_string(cfg.head_dim) +
                     " does not match feature axis " + std::to_string(d));
  }
  if (positions.size() != len) {
    throw ShapeError("RoPE positions length does not match L");
  }
  const std::size_t half = d / 2;
  const double sign = dir == RopeDirection::kForward ? 1.0 : -1.0;

  // Per-position cos/sin tables.
  std::vector<double> cos_t(len * half), sin_t(len * half);
  for (std::size_t j = 0; j < half; ++j) {
    const double theta =
        std::pow(cfg.base, -2.0 * static_cast<double>(j) / static_cast<double>(d));
    for (std::size_t l = 0; l < len; ++l) {
      const double angle = sign * static_cast<double>(positions[l]) * theta;
      cos_t[l * half + j] = std::cos(angle);
      sin_t[l * half + j] = std::sin(angle);
    }
  }

  Tensor out(x.shape());
  const std::size_t slabs = x.size() / (len * d);
  for (std::size_t s = 0; s < slabs; ++s) {
    for (std::size_t l = 0; l < len; ++l) {
      const double* in = x.data().data() + (s * len + l) * d;
      double* o = out.data().data() + (s * len + l) * d;
      for (std::size_t j = 0; j < half; ++j) {
        const double c = cos_t[l * half + j], sn = sin_t[l * half + j];
        const double a = in[2 * j], b = in[2 * j + 1];
        o[2 * j] = a * c - b * sn;
        o[2 * j + 1] = a * sn + b * c;
      }
    }
  }
  return out;
}

std::pair<Tensor, Tensor> ApplyTensorizedRope(
    const Tensor& q_flat, const Tensor& k_flat, std::size_t dim,
    const TensorizationScheme& scheme, const RopeConfig& cfg,
    RopeDirection dir) {
  if (cfg.mode != RopeMode::kPerDimension) {
    throw Error("tensorized RoPE requires per-dimension mode");
  }
  const std::size_t n_i = scheme.dim(dim);
  for (const Tensor* t : {&q_flat, &k_flat}) {
    if (t->rank() != 3 || t->extent(1) != n_i) {
      throw ShapeError("tensorized RoPE expects [B, " + std::to_string(n_i) +
                       ", d], got " + ShapeToString(t->shape()));
    }
  }
  std::vector<std::int64_t> positions(n_i);
  std::iota(positions.begin(), positions.end(), 0);
  return {ApplyRope(q_flat, positions, cfg, dir),
          ApplyRope(k_flat, positions, cfg, dir)};
}

std::size_t EffectiveLength(std::span<const std::size_t> dims, std::size_t dim,
                            std::size_t extra) {
  if (dim >= dims.size()) throw IndexError("dimension index out of range");
  std::size_t capacity = dims[dim] + extra;
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (j != dim) capacity *= dims[j];
  }
  return capacity;
}

ExtrapolationPolicy::ExtrapolationPolicy(std::vector<std::size_t> order)
    : order_(std::move(order)) {
  if (order_.empty()) throw Error("extrapolation order must not be empty");
}

ExtrapolationPolicy ExtrapolationPolicy::LowerToHigher(std::size_t order) {
  std::vector<std::size_t> o(order);
  std::iota(o.rbegin(), o.rend(), 0);
  return ExtrapolationPolicy(std::move(o));
}

ExtrapolationPolicy ExtrapolationPolicy::HigherToLower(std::size_t order) {
  std::vector<std::size_t> o(order);
  std::iota(o.begin(), o.end(), 0);
  return ExtrapolationPolicy(std::move(o));
}

std::vector<GrowthStep> SimulateGrowth(std::span<const std::size_t> dims,
                                       const ExtrapolationPolicy& policy,
                                       std::size_t rounds) {
  std::vector<std::size_t> current(dims.begin(), dims.end());
  for (std::size_t d : policy.order()) {
    if (d >= current.size()) throw IndexError("policy names a missing dimension");
  }
  std::vector<GrowthStep> steps;
  steps.reserve(rounds);
  for (std::size_t r = 0; r < rounds; ++r) {
    const std::size_t d = policy.order()[r % policy.order().size()];
    const std::size_t capacity = EffectiveLength(current, d, 1);
    ++current[d];
    steps.push_back({d, current, capacity});
  }
  return steps;
}

}  // namespace tatt
