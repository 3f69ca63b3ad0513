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
#include <limits>
#include <numeric>
#include <sstream>

#include "oracles.h"
#include "tatt/errors.h"
#include "tatt/toylm.h"

namespace tatt {
namespace {

ToyModel SmallModel(bool rope, std::uint64_t seed = 1) {
  return ToyModel::Init(5, TensorizationScheme({2, 3}, 4), rope, seed);
}

void SgdStep(ToyModel& model, ModelGradients& g, double lr) {
  auto params = model.Parameters();
  auto gs = g.All();
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t x = 0; x < params[p]->size(); ++x) (*params[p])[x] -= lr * (*gs[p])[x];
  }
}

TEST(ToyModel, InitShapes) {
  const auto m = ToyModel::Init(16, TensorizationScheme({4, 4, 4}, 32), true, 3);
  EXPECT_EQ(m.embed.shape(), (Shape{16, 32}));
  EXPECT_EQ(m.wq.shape(), (Shape{32, 32}));
  EXPECT_EQ(m.wout.shape(), (Shape{32, 16}));
  EXPECT_EQ(m.sequence_length(), 64u);
  ASSERT_TRUE(m.rope.has_value());
  EXPECT_EQ(m.rope->head_dim, 32u);
  EXPECT_FALSE(ToyModel::Init(16, TensorizationScheme({4, 4}, 8), false, 3).rope);
  EXPECT_THROW(ToyModel::Init(3, TensorizationScheme({4}, 8), false, 3), Error);
}

TEST(RecallTask, SampleLayout) {
  const RecallTask task(16, 10);
  Engine eng = MakeEngine(4);
  for (int i = 0; i < 100; ++i) {
    const auto s = task.Draw(eng);
    ASSERT_EQ(s.tokens.size(), 16u);
    EXPECT_EQ(s.tokens[s.key_position], RecallTask::kKeyMarker);
    EXPECT_EQ(s.tokens[s.key_position + 1], s.label);
    EXPECT_EQ(s.tokens.back(), RecallTask::kQueryMarker);
    EXPECT_GE(s.label, RecallTask::kFirstValue);
    EXPECT_LT(s.label, 10u);
    EXPECT_EQ(std::count(s.tokens.begin(), s.tokens.end(), RecallTask::kFiller), 13);
  }
  EXPECT_DOUBLE_EQ(task.chance(), 0.1);
  EXPECT_THROW(RecallTask(2, 10), Error);
  EXPECT_THROW(RecallTask(8, 3), Error);
}

TEST(ForwardLoss, ZeroReadoutGivesUniformLoss) {
  auto model = SmallModel(true);
  model.wout.storage().assign(model.wout.size(), 0.0);
  Engine eng = MakeEngine(5);
  const auto batch = RecallTask(6, 5).DrawBatch(4, eng);
  EXPECT_NEAR(ForwardLoss(model, batch).loss, std::log(5.0), 1e-12);
}

TEST(ForwardLoss, VocabularyPermutationCovariance) {
  const auto model = SmallModel(true, 2);
  Engine eng = MakeEngine(6);
  const auto batch = RecallTask(6, 5).DrawBatch(3, eng);
  const std::vector<std::uint32_t> perm = {3, 0, 4, 1, 2};
  ToyModel permuted = model;
  for (std::size_t v = 0; v < 5; ++v) {
    for (std::size_t f = 0; f < 4; ++f) {
      permuted.embed.at({perm[v], f}) = model.embed.at({v, f});
      permuted.wout.at({f, perm[v]}) = model.wout.at({f, v});
    }
  }
  Batch mapped = batch;
  for (auto& s : mapped) {
    for (auto& t : s.tokens) t = perm[t];
    s.label = perm[s.label];
  }
  const auto a = ForwardLoss(model, batch), b = ForwardLoss(permuted, mapped);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  EXPECT_EQ(a.correct, b.correct);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t t = 0; t < 6; ++t) {
      for (std::size_t v = 0; v < 5; ++v) {
        EXPECT_NEAR(a.logits.at({i, t, v}), b.logits.at({i, t, perm[v]}), 1e-12);
      }
    }
  }
}

TEST(ForwardLoss, HierarchicalCausalCone) {
  // Output at t may depend on s only if s_j <= t_j in every coordinate.
  const std::vector<std::size_t> dims = {2, 3};
  const auto model = SmallModel(true, 3);
  Engine eng = MakeEngine(7);
  const auto base = RecallTask(6, 5).Draw(eng);
  const auto ref = ForwardLoss(model, {base}).logits;
  for (std::size_t s = 0; s < 6; ++s) {
    Batch changed = {base};
    changed[0].tokens[s] = (base.tokens[s] + 1) % 5;
    const auto out = ForwardLoss(model, changed).logits;
    const auto cs = oracle::Coords(s, dims);
    for (std::size_t t = 0; t < 6; ++t) {
      const auto ct = oracle::Coords(t, dims);
      const bool any_exceeds = cs[0] > ct[0] || cs[1] > ct[1];
      const bool every_exceeds = cs[0] > ct[0] && cs[1] > ct[1];
      double diff = 0.0;
      for (std::size_t v = 0; v < 5; ++v) {
        diff = std::max(diff, std::abs(out.at({0, t, v}) - ref.at({0, t, v})));
      }
      if (any_exceeds || every_exceeds) {
        EXPECT_EQ(diff, 0.0) << "s=" << s << " t=" << t;
      } else if (s == t) {
        EXPECT_GT(diff, 0.0);
      }
    }
  }
}

TEST(LossAndGradients, MatchFiniteDifferences) {
  for (bool rope : {false, true}) {
    const auto model = SmallModel(rope, 4);
    Engine eng = MakeEngine(8);
    const auto batch = RecallTask(6, 5).DrawBatch(2, eng);
    auto [out, grads] = LossAndGradients(model, batch);
    EXPECT_NEAR(out.loss, ForwardLoss(model, batch).loss, 1e-14);
    auto gs = grads.All();
    for (std::size_t p = 0; p < gs.size(); ++p) {
      const auto f = [&](const Tensor& x) {
        ToyModel probe = model;
        *probe.Parameters()[p] = x;
        return ForwardLoss(probe, batch).loss;
      };
      const Tensor fd = oracle::FiniteDifference(f, *model.Parameters()[p]);
      EXPECT_LT(oracle::MaxRelativeError(*gs[p], fd, 1e-4), 1e-3)
          << "param " << p << " rope " << rope;
    }
  }
}

TEST(LossAndGradients, OverfitsSingleSample) {
  auto model = SmallModel(true, 5);
  Engine eng = MakeEngine(9);
  const Batch one = {RecallTask(6, 5).Draw(eng)};
  double loss = 0.0;
  for (int step = 0; step < 200; ++step) {
    auto [out, grads] = LossAndGradients(model, one);
    loss = out.loss;
    SgdStep(model, grads, 0.5);
  }
  EXPECT_LT(ForwardLoss(model, one).loss, 0.1);
  EXPECT_LT(loss, 0.2);
}

TEST(LossAndGradients, RejectsBadSamples) {
  const auto model = SmallModel(false);
  Engine eng = MakeEngine(1);
  auto s = RecallTask(6, 5).Draw(eng);
  auto bad = s;
  bad.tokens[0] = 5;
  EXPECT_THROW(ForwardLoss(model, {bad}), ShapeError);
  bad = s;
  bad.tokens.push_back(0);
  EXPECT_THROW(ForwardLoss(model, {bad}), ShapeError);
  bad = s;
  bad.label = 9;
  EXPECT_THROW(LossAndGradients(model, {bad}), ShapeError);
  EXPECT_THROW(ForwardLoss(model, {}), Error);
}

TEST(Train, ZeroLearningRateKeepsModel) {
  auto model = SmallModel(true, 6);
  const auto before = model;
  TrainOptions opts;
  opts.steps = 5;
  opts.lr = 0.0;
  opts.eval_samples = 16;
  const auto trace = Train(model, RecallTask(6, 5), opts);
  EXPECT_EQ(model.embed, before.embed);
  EXPECT_EQ(model.wout, before.wout);
  ASSERT_EQ(trace.loss.size(), 5u);
  EXPECT_FALSE(trace.diverged);
}

TEST(Train, BitIdenticalTraces) {
  TrainOptions opts;
  opts.steps = 20;
  opts.seed = 42;
  opts.eval_samples = 32;
  auto a = SmallModel(true, 7), b = SmallModel(true, 7);
  const auto ta = Train(a, RecallTask(6, 5), opts);
  const auto tb = Train(b, RecallTask(6, 5), opts);
  EXPECT_EQ(ta.loss, tb.loss);
  EXPECT_EQ(ta.accuracy, tb.accuracy);
  EXPECT_EQ(ta.final_accuracy, tb.final_accuracy);
  EXPECT_EQ(a.wq, b.wq);
}

TEST(Train, LossDecreasesOnSmallTask) {
  auto model = SmallModel(true, 8);
  TrainOptions opts;
  opts.steps = 300;
  opts.eval_samples = 64;
  const auto trace = Train(model, RecallTask(6, 5), opts);
  const double head = std::accumulate(trace.loss.begin(), trace.loss.begin() + 20, 0.0);
  const double tail = std::accumulate(trace.loss.end() - 20, trace.loss.end(), 0.0);
  EXPECT_LT(tail, head);
}

TEST(Train, DetectsDivergence) {
  auto model = SmallModel(true, 9);
  model.wq[0] = std::numeric_limits<double>::quiet_NaN();
  TrainOptions opts;
  opts.steps = 10;
  const auto trace = Train(model, RecallTask(6, 5), opts);
  EXPECT_TRUE(trace.diverged);
  EXPECT_EQ(trace.loss.size(), 1u);
  EXPECT_THROW(Train(model, RecallTask(7, 5), opts), ShapeError);
  opts.steps = 0;
  EXPECT_THROW(Train(model, RecallTask(6, 5), opts), Error);
}

TEST(TraceCsv, Format) {
  TrainTrace trace;
  trace.loss = {1.5, 0.25};
  trace.accuracy = {0.0, 0.5};
  std::ostringstream os;
  WriteTraceCsv(os, trace);
  EXPECT_EQ(os.str(), "step,loss,accuracy\n0,1.5,0\n1,0.25,0.5\n");
}

}  // namespace
}  // namespace tatt
