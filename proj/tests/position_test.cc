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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.h"
#include "tatt/errors.h"
#include "tatt/linalg.h"
#include "tatt/position.h"
#include "tatt/random.h"
#include "tatt/tensor_ops.h"

namespace tatt {
namespace {

RopeConfig Rope(std::size_t d, RopeMode mode = RopeMode::kSequential) {
  RopeConfig cfg;
  cfg.head_dim = d;
  cfg.mode = mode;
  return cfg;
}

std::vector<std::int64_t> Range(std::size_t n) {
  std::vector<std::int64_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

TEST(Coords, MixedRadix) {
  const std::vector<std::size_t> d23 = {2, 3};
  EXPECT_EQ(LinearToCoords(0, d23).coords, (std::vector<std::size_t>{0, 0}));
  EXPECT_EQ(LinearToCoords(5, d23).coords, (std::vector<std::size_t>{1, 2}));
  const std::vector<std::size_t> cube = {32, 32, 32};
  EXPECT_EQ(LinearToCoords(32768, cube).coords, (std::vector<std::size_t>{32, 0, 0}));
  EXPECT_EQ(LinearToCoords(70000, cube).coords[0], 70000u / 1024u);
}

TEST(Coords, RoundTrip) {
  const std::vector<std::size_t> dims = {3, 1, 4, 2};
  for (std::size_t t = 0; t < 24; ++t) {
    const auto c = LinearToCoords(t, dims);
    EXPECT_EQ(c.coords, oracle::Coords(t, dims));
    EXPECT_EQ(CoordsToLinear(c, dims), t);
  }
  // The leading coordinate may overflow under extrapolation.
  EXPECT_EQ(CoordsToLinear(PositionCoords{{5, 0, 3, 1}}, dims), 5u * 8u + 7u);
  EXPECT_THROW(CoordsToLinear(PositionCoords{{0, 1, 0, 0}}, dims), IndexError);
  EXPECT_THROW(CoordsToLinear(PositionCoords{{0, 0}}, dims), IndexError);
}

TEST(Rope, ConfigValidation) {
  EXPECT_THROW(Rope(3).Validate(), ShapeError);
  EXPECT_THROW(Rope(0).Validate(), ShapeError);
  RopeConfig bad = Rope(4);
  bad.base = 1.0;
  EXPECT_THROW(bad.Validate(), Error);
  EXPECT_NO_THROW(Rope(4).Validate());
}

TEST(Rope, PositionZeroIsIdentity) {
  Engine eng = MakeEngine(1);
  const Tensor x = RandomNormal({1, 8}, eng);
  const std::vector<std::int64_t> zero = {0};
  EXPECT_EQ(ApplyRope(x, zero, Rope(8)), x);
}

TEST(Rope, UnitRotation) {
  const Tensor x({1, 2}, std::vector<double>{1.0, 0.0});
  const std::vector<std::int64_t> one = {1};
  const Tensor r = ApplyRope(x, one, Rope(2));
  EXPECT_DOUBLE_EQ(r[0], std::cos(1.0));
  EXPECT_DOUBLE_EQ(r[1], std::sin(1.0));
}

TEST(Rope, MatchesRotationOracleAndInverts) {
  Engine eng = MakeEngine(2);
  const Tensor x = RandomNormal({3, 5, 6}, eng);
  RopeConfig cfg = Rope(6);
  cfg.base = 500.0;
  const std::vector<std::int64_t> pos = {0, 3, -2, 17, 1000};
  const Tensor r = ApplyRope(x, pos, cfg);
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t l = 0; l < 5; ++l) {
      const auto want = oracle::Rotate(&x[(b * 5 + l) * 6], 6,
                                       static_cast<double>(pos[l]), 500.0);
      for (std::size_t f = 0; f < 6; ++f) {
        EXPECT_NEAR(r[(b * 5 + l) * 6 + f], want[f], 1e-12);
      }
    }
  }
  EXPECT_LT(MaxAbsDiff(ApplyRope(r, pos, cfg, RopeDirection::kInverse), x), 1e-12);
}

TEST(Rope, PreservesPairNorms) {
  Engine eng = MakeEngine(3);
  const Tensor x = RandomNormal({64, 16}, eng);
  const Tensor r = ApplyRope(x, Range(64), Rope(16));
  for (std::size_t l = 0; l < 64; ++l) {
    double full_x = 0.0, full_r = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
      const double a = std::hypot(x[l * 16 + 2 * j], x[l * 16 + 2 * j + 1]);
      const double b = std::hypot(r[l * 16 + 2 * j], r[l * 16 + 2 * j + 1]);
      EXPECT_NEAR(a, b, 4 * std::numeric_limits<double>::epsilon() * a);
      full_x += a * a;
      full_r += b * b;
    }
    EXPECT_NEAR(std::sqrt(full_x), std::sqrt(full_r), 1e-12);
  }
}

TEST(Rope, ScoresDependOnlyOnOffset) {
  Engine eng = MakeEngine(4);
  const Tensor q = RandomNormal({1, 8}, eng), k = RandomNormal({1, 8}, eng);
  for (std::int64_t offset : {-5, 0, 3, 40}) {
    double reference = 0.0;
    for (std::int64_t p2 = 0; p2 < 50; p2 += 7) {
      const std::vector<std::int64_t> a = {p2 + offset}, b = {p2};
      const double s = Dot(ApplyRope(q, a, Rope(8)).data(), ApplyRope(k, b, Rope(8)).data());
      if (p2 == 0) reference = s;
      EXPECT_NEAR(s, reference, 1e-10);
    }
  }
}

TEST(Rope, Errors) {
  const Tensor x({4, 6});
  EXPECT_THROW(ApplyRope(x, Range(3), Rope(6)), ShapeError);
  EXPECT_THROW(ApplyRope(x, Range(4), Rope(4)), ShapeError);
  EXPECT_THROW(ApplyRope(Tensor({6}), Range(1), Rope(6)), ShapeError);
}

TEST(TensorizedRope, RotatesAlongTheFlattenedAxis) {
  const TensorizationScheme s({3, 4}, 4);
  Engine eng = MakeEngine(5);
  const Tensor q = RandomNormal(s.tensor_shape(), eng), k = RandomNormal(s.tensor_shape(), eng);
  for (std::size_t dim = 0; dim < 2; ++dim) {
    const Tensor qf = ModeFlatten(q, dim), kf = ModeFlatten(k, dim);
    const auto [qr, kr] =
        ApplyTensorizedRope(qf, kf, dim, s, Rope(4, RopeMode::kPerDimension));
    const std::size_t ni = s.dim(dim);
    for (std::size_t b = 0; b < s.batch(dim); ++b) {
      for (std::size_t p = 0; p < ni; ++p) {
        const auto want = oracle::Rotate(&qf[(b * ni + p) * 4], 4, static_cast<double>(p));
        for (std::size_t f = 0; f < 4; ++f) {
          EXPECT_NEAR(qr[(b * ni + p) * 4 + f], want[f], 1e-15);
        }
      }
    }
    EXPECT_EQ(kr.shape(), kf.shape());
  }
}

TEST(TensorizedRope, UnitExtentIsIdentity) {
  const TensorizationScheme s({1, 5}, 4);
  Engine eng = MakeEngine(6);
  const Tensor q = RandomNormal(s.tensor_shape(), eng);
  const Tensor qf = ModeFlatten(q, 0);
  const auto [qr, kr] = ApplyTensorizedRope(qf, qf, 0, s, Rope(4, RopeMode::kPerDimension));
  EXPECT_EQ(qr, qf);
}

TEST(TensorizedRope, SingleDimensionEqualsSequential) {
  const TensorizationScheme s({12}, 6);
  Engine eng = MakeEngine(7);
  const Tensor q = RandomNormal(s.tensor_shape(), eng);
  const auto [qr, kr] =
      ApplyTensorizedRope(ModeFlatten(q, 0), ModeFlatten(q, 0), 0, s,
                          Rope(6, RopeMode::kPerDimension));
  const Tensor seq = ApplyRope(q, Range(12), Rope(6));
  EXPECT_LT(MaxAbsDiff(qr.Reshaped({12, 6}), seq), 1e-12);
}

TEST(TensorizedRope, FiberScoresDependOnCoordinateOffset) {
  // With identical raw q and k rows along a fiber, the rotated score
  // between coordinates a and c depends only on a - c.
  const TensorizationScheme s({2, 6}, 4);
  Engine eng = MakeEngine(8);
  const Tensor row = RandomNormal({4}, eng);
  const Tensor other = RandomNormal({4}, eng);
  Tensor q(s.tensor_shape()), k(s.tensor_shape());
  for (std::size_t t = 0; t < 12; ++t) {
    for (std::size_t f = 0; f < 4; ++f) {
      q[t * 4 + f] = row[f];
      k[t * 4 + f] = other[f];
    }
  }
  const auto [qr, kr] = ApplyTensorizedRope(ModeFlatten(q, 1), ModeFlatten(k, 1), 1, s,
                                            Rope(4, RopeMode::kPerDimension));
  auto score = [&](std::size_t b, std::size_t a, std::size_t c) {
    return Dot(qr.data().subspan((b * 6 + a) * 4, 4), kr.data().subspan((b * 6 + c) * 4, 4));
  };
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t a = 1; a < 6; ++a) {
      EXPECT_NEAR(score(b, a, a - 1), score(0, 1, 0), 1e-10);
    }
    EXPECT_NEAR(score(b, 5, 2), score(0, 3, 0), 1e-10);
  }
}

TEST(TensorizedRope, RejectsSequentialModeAndBadShapes) {
  const TensorizationScheme s({2, 3}, 4);
  const Tensor f({3, 2, 4});
  EXPECT_THROW(ApplyTensorizedRope(f, f, 0, s, Rope(4, RopeMode::kSequential)), Error);
  EXPECT_THROW(ApplyTensorizedRope(f, f, 1, s, Rope(4, RopeMode::kPerDimension)), ShapeError);
}

TEST(EffectiveLength, Arithmetic) {
  const std::vector<std::size_t> cube = {32, 32, 32};
  EXPECT_EQ(EffectiveLength(cube, 0, 1), 33792u);
  EXPECT_EQ(EffectiveLength(cube, 2, 1), 33792u);
  EXPECT_EQ(EffectiveLength(cube, 2, 2), 32768u + 2048u);
  EXPECT_EQ(EffectiveLength(cube, 1, 0), 32768u);
  EXPECT_THROW(EffectiveLength(cube, 3, 1), IndexError);
  const std::vector<std::size_t> dims = {3, 5, 7};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t p = 0; p < 4; ++p) {
      EXPECT_EQ(EffectiveLength(dims, i, p) - EffectiveLength(dims, i, 0),
                p * (105 / dims[i]));
    }
  }
}

TEST(Extrapolation, LowerToHigherGrowsLastDimensionFirst) {
  const std::vector<std::size_t> cube = {32, 32, 32};
  const auto policy = ExtrapolationPolicy::LowerToHigher(3);
  EXPECT_EQ(policy.order(), (std::vector<std::size_t>{2, 1, 0}));
  const auto steps = SimulateGrowth(cube, policy, 4);
  ASSERT_EQ(steps.size(), 4u);
  EXPECT_EQ(steps[0].dim, 2u);
  EXPECT_EQ(steps[0].capacity, 33792u);
  EXPECT_EQ(steps[1].dims, (std::vector<std::size_t>{32, 33, 33}));
  EXPECT_EQ(steps[3].dim, 2u);
  EXPECT_EQ(steps[3].capacity, 33u * 33u * 34u);
  EXPECT_EQ(ExtrapolationPolicy::HigherToLower(3).order(),
            (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_THROW(ExtrapolationPolicy({}), Error);
  EXPECT_THROW(SimulateGrowth(cube, ExtrapolationPolicy({5}), 1), IndexError);
}

}  // namespace
}  // namespace tatt
