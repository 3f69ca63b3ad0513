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

#ifndef TATT_TOYLM_H_
#define TATT_TOYLM_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tatt/attention.h"
#include "tatt/position.h"
#include "tatt/random.h"
#include "tatt/tensor.h"

namespace tatt {

// Single attention block: embed -> (Q, K, V projections) -> tensorized
// attention with hierarchical-causal masks and per-dimension RoPE ->
// output projection. No residual path, norm or MLP.
struct ToyModel {
  std::size_t vocab = 0;
  TensorizationScheme scheme{{1}, 2};
  std::optional<RopeConfig> rope;
  Tensor embed;  // [V, d]
  Tensor wq, wk, wv;  // [d, d]
  Tensor wout;  // [d, V]

  static ToyModel Init(std::size_t vocab, TensorizationScheme scheme,
                       bool use_rope, std::uint64_t seed);

  std::size_t feature_dim() const { return scheme.feature_dim(); }
  std::size_t sequence_length() const { return scheme.sequence_length(); }
  std::vector<Tensor*> Parameters();
  std::vector<const Tensor*> Parameters() const;
};

// One planted key/value pair per sequence:
//   token 0 filler, 1 key marker, 2 query marker, 3..V-1 values.
// The key marker sits at p, its value at p + 1, the query marker at n - 1;
// the label is the value token.
struct RecallSample {
  std::vector<std::uint32_t> tokens;
  std::uint32_t label = 0;
  std::size_t key_position = 0;
};
using Batch = std::vector<RecallSample>;

class RecallTask {
 public:
  static constexpr std::uint32_t kFiller = 0;
  static constexpr std::uint32_t kKeyMarker = 1;
  static constexpr std::uint32_t kQueryMarker = 2;
  static constexpr std::uint32_t kFirstValue = 3;

  RecallTask(std::size_t sequence_length, std::size_t vocab);

  std::size_t sequence_length() const { return length_; }
  std::size_t vocab() const { return vocab_; }
  // Uniform guessing over the vocabulary.
  double chance() const { return 1.0 / static_cast<double>(vocab_); }

  RecallSample Draw(Engine& eng) const;
  Batch DrawBatch(std::size_t size, Engine& eng) const;

 private:
  std::size_t length_;
  std::size_t vocab_;
};

struct LossOutput {
  double loss = 0.0;     // mean cross-entropy at the final position
  Tensor logits;         // [batch, n, V]
  std::size_t correct = 0;  // argmax(final logits) == label
};

struct ModelGradients {
  Tensor embed, wq, wk, wv, wout;

  std::vector<Tensor*> All();
  double Norm() const;
};

// Deterministic given parameters and batch. Throws ShapeError for token
// ids >= V or a sequence length that does not match the scheme.
LossOutput ForwardLoss(const ToyModel& model, const Batch& batch);

// Loss plus exact gradients of the mean loss.
std::pair<LossOutput, ModelGradients> LossAndGradients(const ToyModel& model,
                                                       const Batch& batch);

struct TrainOptions {
  std::size_t steps = 2000;
  double lr = 0.5;
  std::uint64_t seed = 0;
  std::size_t batch_size = 8;
  double clip_norm = 1.0;
  std::size_t eval_samples = 512;
};

struct TrainTrace {
  std::vector<double> loss;      // per step, training batch
  std::vector<double> accuracy;  // per step, training batch
  double final_accuracy = 0.0;   // held-out samples after the last step
  bool diverged = false;         // a NaN/inf loss stopped training
};

// Plain SGD with global gradient-norm clipping. Single-threaded and
// bit-reproducible for a given seed.
TrainTrace Train(ToyModel& model, const RecallTask& task,
                 const TrainOptions& options);

double EvaluateAccuracy(const ToyModel& model, const RecallTask& task,
                        std::size_t samples, std::uint64_t seed);

// Header: step,loss,accuracy
void WriteTraceCsv(std::ostream& os, const TrainTrace& trace);

}  // namespace tatt

#endif  // TATT_TOYLM_H_
