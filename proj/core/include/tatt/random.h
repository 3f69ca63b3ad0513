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

#ifndef TATT_RANDOM_H_
#define TATT_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

#include "tatt/tensor.h"

namespace tatt {

using Engine = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Engine for substream `stream` of a 64-bit experiment seed. Every random
// draw in the library goes through one of these, keyed by what it is for
// (trial index, restart index, ...), so any single piece is replayable.
inline Engine MakeEngine(std::uint64_t seed,
                         std::initializer_list<std::uint64_t> stream = {}) {
  std::uint64_t key = Mix64(seed);
  for (std::uint64_t s : stream) key = Mix64(key ^ Mix64(s + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(key),
                    static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(Mix64(key)),
                    static_cast<std::uint32_t>(Mix64(key) >> 32)};
  return Engine(seq);
}

inline Tensor RandomNormal(Shape shape, Engine& eng, double stddev = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& x : t.data()) x = dist(eng);
  return t;
}

inline Tensor RandomUniform(Shape shape, Engine& eng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& x : t.data()) x = dist(eng);
  return t;
}

}  // namespace tatt

#endif  // TATT_RANDOM_H_
