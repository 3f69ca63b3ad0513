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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.h"
#include "tatt/errors.h"
#include "tatt/random.h"
#include "tatt/tatn_io.h"
#include "tatt/tensor.h"
#include "tatt/tensor_ops.h"

namespace tatt {
namespace {

Tensor Iota(Shape shape) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  return t;
}

TEST(Tensor, RejectsEmptyAndZeroExtents) {
  EXPECT_THROW(Tensor(Shape{}), ShapeError);
  EXPECT_THROW(Tensor(Shape{2, 0}), ShapeError);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>(3)), ShapeError);
}

TEST(Tensor, RowMajorOffsets) {
  Tensor t = Iota({2, 3, 4});
  EXPECT_EQ(t.at({1, 2, 3}), 23.0);
  EXPECT_EQ(t.at({0, 1, 0}), 4.0);
  EXPECT_THROW(t.at({0, 3, 0}), IndexError);
  EXPECT_THROW(t.at({0, 0}), IndexError);
  EXPECT_EQ(RowMajorStrides(t.shape()), (Shape{12, 4, 1}));
}

TEST(Tensor, ReshapeKeepsData) {
  Tensor t = Iota({6, 2});
  Tensor r = t.Reshaped({2, 3, 2});
  EXPECT_EQ(r.at({1, 2, 1}), 11.0);
  EXPECT_THROW(t.Reshaped({5, 2}), ShapeError);
}

TEST(Scheme, LengthAndBatch) {
  TensorizationScheme s({2, 3, 4}, 8);
  EXPECT_EQ(s.sequence_length(), 24u);
  EXPECT_EQ(s.batch(1), 8u);
  EXPECT_EQ(s.tensor_shape(), (Shape{2, 3, 4, 8}));
  EXPECT_EQ(s.ToString(), "2x3x4");
  EXPECT_THROW(TensorizationScheme({}, 4), ShapeError);
  EXPECT_THROW(TensorizationScheme({2, 0}, 4), ShapeError);
}

TEST(Scheme, ParseDims) {
  EXPECT_EQ(ParseDims("4,4,4"), (std::vector<std::size_t>{4, 4, 4}));
  EXPECT_EQ(ParseDims("32x16"), (std::vector<std::size_t>{32, 16}));
  EXPECT_THROW(ParseDims(""), Error);
  EXPECT_THROW(ParseDims("4,,4"), Error);
  EXPECT_THROW(ParseDims("4,a"), Error);
}

TEST(Scheme, BalancedDims) {
  EXPECT_EQ(BalancedDims(1), (std::vector<std::size_t>{1}));
  EXPECT_EQ(BalancedDims(16), (std::vector<std::size_t>{16}));
  EXPECT_EQ(BalancedDims(1024), (std::vector<std::size_t>{16, 8, 8}));
  EXPECT_EQ(BalancedDims(4096), (std::vector<std::size_t>{16, 16, 16}));
  EXPECT_EQ(BalancedDims(97), (std::vector<std::size_t>{97}));
  for (std::size_t n : {12u, 360u, 1000u, 16384u}) {
    EXPECT_EQ(ShapeProduct(BalancedDims(n)), n);
  }
}

TEST(Tensorize, RoundTripAndShapeErrors) {
  TensorizationScheme s({2, 3}, 2);
  Tensor seq = Iota({6, 2});
  Tensor t = Tensorize(seq, s);
  EXPECT_EQ(t.shape(), (Shape{2, 3, 2}));
  EXPECT_EQ(t.at({1, 2, 1}), seq.at({5, 1}));
  EXPECT_EQ(Sequentialize(t), seq);
  EXPECT_THROW(Tensorize(Iota({7, 2}), s), ShapeError);
  EXPECT_THROW(Tensorize(Iota({6, 3}), s), ShapeError);
}

TEST(ModeFlatten, MatchesIndexOracle) {
  const std::vector<std::size_t> dims = {2, 3, 4};
  const std::size_t d = 2;
  Tensor t = Iota({2, 3, 4, d});
  for (std::size_t mode = 0; mode < 3; ++mode) {
    Tensor flat = ModeFlatten(t, mode);
    const std::size_t ni = dims[mode];
    ASSERT_EQ(flat.shape(), (Shape{24 / ni, ni, d}));
    for (std::size_t pos = 0; pos < 24; ++pos) {
      auto c = oracle::Coords(pos, dims);
      std::size_t b = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        if (j != mode) b = b * dims[j] + c[j];
      }
      for (std::size_t f = 0; f < d; ++f) {
        EXPECT_EQ(flat.at({b, c[mode], f}), t[pos * d + f]);
      }
    }
    EXPECT_EQ(ModeFold(flat, mode, t.shape(), 3), t);
  }
  EXPECT_THROW(ModeFlatten(t, 3), IndexError);
}

TEST(ModeFlatten, SingleModeIsReshape) {
  Tensor t = Iota({5, 3});
  Tensor flat = ModeFlatten(t, 0);
  EXPECT_EQ(flat.shape(), (Shape{1, 5, 3}));
  EXPECT_TRUE(std::equal(flat.data().begin(), flat.data().end(), t.data().begin()));
}

TEST(BatchedMatmul, AgreesWithLoops) {
  Engine eng = MakeEngine(3);
  Tensor a = RandomNormal({3, 4, 5}, eng), b = RandomNormal({3, 5, 2}, eng);
  Tensor c = BatchedMatmul(a, b);
  Tensor bt = RandomNormal({3, 6, 5}, eng);
  Tensor ct = BatchedMatmulTransB(a, bt);
  Tensor at = RandomNormal({3, 4, 7}, eng);
  Tensor ca = BatchedMatmulTransA(a, at);
  for (std::size_t x = 0; x < 3; ++x) {
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 5; ++k) acc += a.at({x, i, k}) * b.at({x, k, j});
        EXPECT_NEAR(c.at({x, i, j}), acc, 1e-13);
      }
      for (std::size_t j = 0; j < 6; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 5; ++k) acc += a.at({x, i, k}) * bt.at({x, j, k});
        EXPECT_NEAR(ct.at({x, i, j}), acc, 1e-13);
      }
    }
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 7; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 4; ++k) acc += a.at({x, k, i}) * at.at({x, k, j});
        EXPECT_NEAR(ca.at({x, i, j}), acc, 1e-13);
      }
    }
  }
  EXPECT_THROW(BatchedMatmul(a, a), ShapeError);
}

TEST(Softmax, RowsAreStochastic) {
  Engine eng = MakeEngine(4);
  Tensor s = SoftmaxLastAxis(RandomNormal({3, 4, 9}, eng, 5.0));
  for (std::size_t r = 0; r < 12; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 9; ++c) {
      EXPECT_GE(s[r * 9 + c], 0.0);
      sum += s[r * 9 + c];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Softmax, StableForLargeScores) {
  Tensor s({1, 3}, std::vector<double>{1000.0, 1000.0, -1000.0});
  Tensor p = SoftmaxLastAxis(s);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_EQ(p[2], 0.0);
}

TEST(Softmax, MaskZeroesAndBroadcasts) {
  Tensor s({2, 2, 3}, 1.0);
  BoolTensor mask({2, 3}, std::vector<std::uint8_t>{1, 0, 1, 0, 1, 0});
  Tensor p = SoftmaxLastAxis(s, &mask);
  EXPECT_NEAR(p.at({1, 0, 0}), 0.5, 1e-15);
  EXPECT_EQ(p.at({1, 0, 1}), 0.0);
  EXPECT_EQ(p.at({1, 1, 1}), 1.0);
}

TEST(Softmax, FullyMaskedRowPolicy) {
  Tensor s({2, 2}, 1.0);
  BoolTensor mask({2, 2}, std::vector<std::uint8_t>{1, 1, 0, 0});
  EXPECT_THROW(SoftmaxLastAxis(s, &mask, MaskPolicy::kStrict), MaskError);
  Tensor p = SoftmaxLastAxis(s, &mask, MaskPolicy::kPermissive);
  EXPECT_EQ(p.at({1, 0}), 0.0);
  EXPECT_EQ(p.at({1, 1}), 0.0);
  EXPECT_NEAR(p.at({0, 1}), 0.5, 1e-15);
  BoolTensor bad({3}, 1);
  EXPECT_THROW(SoftmaxLastAxis(s, &bad), ShapeError);
}

TEST(Tatn, RoundTripRoundsToFloat) {
  Engine eng = MakeEngine(5);
  Tensor t = RandomNormal({3, 4, 2}, eng);
  std::stringstream ss;
  WriteTatn(ss, t);
  Tensor back = ReadTatn(ss);
  ASSERT_EQ(back.shape(), t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back[i], static_cast<double>(static_cast<float>(t[i])));
  }
}

TEST(Tatn, ByteLayout) {
  Tensor t({1, 2}, std::vector<double>{1.0, -2.0});
  std::stringstream ss;
  WriteTatn(ss, t);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4u + 1u + 2u * 4u + 2u * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "TATN");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2u);
  // Extents 1 and 2 as u32 little-endian.
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[9]), 2u);
  // 1.0f = 0x3F800000 little-endian.
  EXPECT_EQ(static_cast<unsigned char>(bytes[13]), 0x00u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 0x3Fu);
  EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 0xC0u);  // -2.0f
}

TEST(Tatn, RejectsMalformedInput) {
  std::stringstream bad_magic("TATX\x01\x01\x00\x00\x00");
  EXPECT_THROW(ReadTatn(bad_magic), FormatError);
  std::stringstream truncated(std::string("TATN\x01\x02\x00\x00\x00", 9));
  EXPECT_THROW(ReadTatn(truncated), FormatError);
  std::stringstream zero_rank(std::string("TATN\x00", 5));
  EXPECT_THROW(ReadTatn(zero_rank), FormatError);
  EXPECT_THROW(ReadTatn(std::filesystem::path("/nonexistent/file.tatn")), FormatError);
}

TEST(MatrixCsv, SkipsCommentsAndRejectsRagged) {
  std::stringstream ok("# seed=1 version=0.1.0\n1,2\n\n3,4.5\n");
  Tensor m = ReadMatrixCsv(ok);
  EXPECT_EQ(m.shape(), (Shape{2, 2}));
  EXPECT_EQ(m.at({1, 1}), 4.5);
  std::stringstream ragged("1,2\n3\n");
  EXPECT_THROW(ReadMatrixCsv(ragged), FormatError);
  std::stringstream junk("1,x\n");
  EXPECT_THROW(ReadMatrixCsv(junk), FormatError);
}

TEST(MatrixFiles, LoadSquareFromEitherFormat) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto tatn = dir / "tatt_square_test.tatn";
  const auto csv = dir / "tatt_square_test.csv";
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at({i, i}) = 1.0;
  WriteTatn(tatn, eye);
  { std::ofstream(csv) << "1,0,0\n0,1,0\n0,0,1\n"; }
  EXPECT_EQ(LoadSquareMatrix(tatn), eye);
  EXPECT_EQ(LoadSquareMatrix(csv), eye);
  WriteTatn(tatn, Tensor({2, 3}));
  EXPECT_THROW(LoadSquareMatrix(tatn), FormatError);
  std::filesystem::remove(tatn);
  std::filesystem::remove(csv);
}

}  // namespace
}  // namespace tatt
