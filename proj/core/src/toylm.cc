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

#include "tatt/toylm.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "tatt/linalg.h"
#include "tatt/tensor_ops.h"

namespace tatt {

namespace {

struct SampleForward {
  Tensor x;  // [n, d] embedded tokens
  Tensor q, k, v;  // tensor shape [n_1..n_m, d]
  AttentionResult attn;
  Tensor logits;  // [n, V]
};

AttentionOptions ModelAttentionOptions(const ToyModel& model) {
  AttentionOptions opts;
  opts.rope = model.rope;
  return opts;
}

void CheckSample(const ToyModel& model, const RecallSample& s) {
  if (s.tokens.size() != model.sequence_length()) {
    throw ShapeError("sample length " + std::to_string(s.tokens.size()) +
                     " does not match scheme length " +
                     std::to_string(model.sequence_length()));
  }
  for (std::uint32_t t : s.tokens) {
    if (t >= model.vocab) throw ShapeError("token id exceeds vocabulary");
  }
  if (s.label >= model.vocab) throw ShapeError("label exceeds vocabulary");
}

SampleForward Forward(const ToyModel& model, const DimMask& masks,
                      const RecallSample& s) {
  CheckSample(model, s);
  const std::size_t n = model.sequence_length(), d = model.feature_dim();
  SampleForward f;
  f.x = Tensor({n, d});
  for (std::size_t t = 0; t < n; ++t) {
    std::copy_n(model.embed.data().begin() + s.tokens[t] * d, d,
                f.x.data().begin() + t * d);
  }
  f.q = Tensorize(Matmul(f.x, model.wq), model.scheme);
  f.k = Tensorize(Matmul(f.x, model.wk), model.scheme);
  f.v = Tensorize(Matmul(f.x, model.wv), model.scheme);
  f.attn = TensorizedAttentionForward(f.q, f.k, f.v, model.scheme, masks,
                                      ModelAttentionOptions(model));
  f.logits = Matmul(Sequentialize(f.attn.output), model.wout);
  return f;
}

// Softmax probabilities and cross-entropy of one logits row.
double CrossEntropy(std::span<const double> logits, std::uint32_t label,
                    std::vector<double>& probs) {
  probs.assign(logits.begin(), logits.end());
  detail::SoftmaxRow(probs.data(), nullptr, probs.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  return std::log(sum) + mx - logits[label];
}

std::size_t Argmax(std::span<const double> row) {
  return static_cast<std::size_t>(
      std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

ToyModel ToyModel::Init(std::size_t vocab, TensorizationScheme scheme,
                        bool use_rope, std::uint64_t seed) {
  if (vocab < 4) throw Error("vocabulary needs at least 4 symbols");
  ToyModel m;
  m.vocab = vocab;
  m.scheme = std::move(scheme);
  const std::size_t d = m.scheme.feature_dim();
  if (use_rope) {
    RopeConfig cfg;
    cfg.head_dim = d;
    cfg.mode = RopeMode::kPerDimension;
    cfg.Validate();
    m.rope = cfg;
  }
  Engine eng = MakeEngine(seed, {0x544F594DULL});
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  m.embed = RandomNormal({vocab, d}, eng);
  m.wq = RandomNormal({d, d}, eng, s);
  m.wk = RandomNormal({d, d}, eng, s);
  m.wv = RandomNormal({d, d}, eng, s);
  m.wout = RandomNormal({d, vocab}, eng, s);
  return m;
}

std::vector<Tensor*> ToyModel::Parameters() {
  return {&embed, &wq, &wk, &wv, &wout};
}

std::vector<const Tensor*> ToyModel::Parameters() const {
  return {&embed, &wq, &wk, &wv, &wout};
}

RecallTask::RecallTask(std::size_t sequence_length, std::size_t vocab)
    : length_(sequence_length), vocab_(vocab) {
  if (length_ < 3) throw Error("recall task needs sequences of length >= 3");
  if (vocab_ <= kFirstValue) throw Error("recall task needs vocab >= 4");
}

RecallSample RecallTask::Draw(Engine& eng) const {
  RecallSample s;
  s.tokens.assign(length_, kFiller);
  std::uniform_int_distribution<std::size_t> pos(0, length_ - 3);
  std::uniform_int_distribution<std::uint32_t> value(
      kFirstValue, static_cast<std::uint32_t>(vocab_ - 1));
  s.key_position = pos(eng);
  s.label = value(eng);
  s.tokens[s.key_position] = kKeyMarker;
  s.tokens[s.key_position + 1] = s.label;
  s.tokens[length_ - 1] = kQueryMarker;
  return s;
}

Batch RecallTask::DrawBatch(std::size_t size, Engine& eng) const {
  Batch b;
  b.reserve(size);
  for (std::size_t i = 0; i < size; ++i) b.push_back(Draw(eng));
  return b;
}

std::vector<Tensor*> ModelGradients::All() {
  return {&embed, &wq, &wk, &wv, &wout};
}

double ModelGradients::Norm() const {
  double s = 0.0;
  for (const Tensor* t : {&embed, &wq, &wk, &wv, &wout}) {
    for (double x : t->data()) s += x * x;
  }
  return std::sqrt(s);
}

LossOutput ForwardLoss(const ToyModel& model, const Batch& batch) {
  if (batch.empty()) throw Error("empty batch");
  const DimMask masks = DimMask::HierarchicalCausal(model.scheme);
  const std::size_t n = model.sequence_length(), vocab = model.vocab;
  LossOutput out;
  out.logits = Tensor({batch.size(), n, vocab});
  std::vector<double> probs;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const SampleForward f = Forward(model, masks, batch[b]);
    std::copy(f.logits.data().begin(), f.logits.data().end(),
              out.logits.data().begin() + b * n * vocab);
    const auto last = f.logits.data().subspan((n - 1) * vocab, vocab);
    out.loss += CrossEntropy(last, batch[b].label, probs);
    if (Argmax(last) == batch[b].label) ++out.correct;
  }
  out.loss /= static_cast<double>(batch.size());
  return out;
}

std::pair<LossOutput, ModelGradients> LossAndGradients(const ToyModel& model,
                                                       const Batch& batch) {
  if (batch.empty()) throw Error("empty batch");
  const DimMask masks = DimMask::HierarchicalCausal(model.scheme);
  const AttentionOptions opts = ModelAttentionOptions(model);
  const std::size_t n = model.sequence_length(), vocab = model.vocab;
  const std::size_t d = model.feature_dim();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  LossOutput out;
  out.logits = Tensor({batch.size(), n, vocab});
  ModelGradients g{Tensor(model.embed.shape()), Tensor(model.wq.shape()),
                   Tensor(model.wk.shape()), Tensor(model.wv.shape()),
                   Tensor(model.wout.shape())};
  std::vector<double> probs;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const RecallSample& s = batch[b];
    const SampleForward f = Forward(model, masks, s);
    std::copy(f.logits.data().begin(), f.logits.data().end(),
              out.logits.data().begin() + b * n * vocab);
    const auto last = f.logits.data().subspan((n - 1) * vocab, vocab);
    out.loss += CrossEntropy(last, s.label, probs);
    if (Argmax(last) == s.label) ++out.correct;

    // dL/dlogits at the final position.
    std::vector<double> dlogit(probs);
    dlogit[s.label] -= 1.0;
    for (auto& x : dlogit) x *= inv_batch;

    const Tensor o = Sequentialize(f.attn.output);
    Tensor d_o({n, d});
    for (std::size_t f_i = 0; f_i < d; ++f_i) {
      const double o_last = o.at({n - 1, f_i});
      double acc = 0.0;
      for (std::size_t c = 0; c < vocab; ++c) {
        g.wout.at({f_i, c}) += o_last * dlogit[c];
        acc += model.wout.at({f_i, c}) * dlogit[c];
      }
      d_o.at({n - 1, f_i}) = acc;
    }

    const AttentionGradients ag = TensorizedAttentionBackward(
        Tensorize(d_o, model.scheme), f.q, f.k, f.v, f.attn.intermediates,
        model.scheme, masks, opts);
    const Tensor dq = Sequentialize(ag.dq), dk = Sequentialize(ag.dk),
                 dv = Sequentialize(ag.dv);
    const Tensor xt = Transpose(f.x);
    const Tensor gq = Matmul(xt, dq), gk = Matmul(xt, dk), gv = Matmul(xt, dv);
    for (std::size_t x = 0; x < gq.size(); ++x) {
      g.wq[x] += gq[x];
      g.wk[x] += gk[x];
      g.wv[x] += gv[x];
    }
    Tensor dx = Matmul(dq, Transpose(model.wq));
    const Tensor dxk = Matmul(dk, Transpose(model.wk));
    const Tensor dxv = Matmul(dv, Transpose(model.wv));
    for (std::size_t x = 0; x < dx.size(); ++x) dx[x] += dxk[x] + dxv[x];
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t f_i = 0; f_i < d; ++f_i) {
        g.embed.at({s.tokens[t], f_i}) += dx.at({t, f_i});
      }
    }
  }
  out.loss *= inv_batch;
  return {std::move(out), std::move(g)};
}

double EvaluateAccuracy(const ToyModel& model, const RecallTask& task,
                        std::size_t samples, std::uint64_t seed) {
  if (samples == 0) return 0.0;
  Engine eng = MakeEngine(seed, {0x4556414CULL});
  std::size_t correct = 0;
  // Chunked so logits for the whole set are never held at once.
  constexpr std::size_t kChunk = 64;
  for (std::size_t done = 0; done < samples; done += kChunk) {
    const Batch b = task.DrawBatch(std::min(kChunk, samples - done), eng);
    correct += ForwardLoss(model, b).correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples);
}

TrainTrace Train(ToyModel& model, const RecallTask& task,
                 const TrainOptions& options) {
  if (options.steps == 0) throw Error("training needs steps >= 1");
  if (task.sequence_length() != model.sequence_length() ||
      task.vocab() != model.vocab) {
    throw ShapeError("task does not match model");
  }
  TrainTrace trace;
  Engine data = MakeEngine(options.seed, {0x44415441ULL});
  for (std::size_t step = 0; step < options.steps; ++step) {
    const Batch batch = task.DrawBatch(options.batch_size, data);
    auto [out, grads] = LossAndGradients(model, batch);
    trace.loss.push_back(out.loss);
    trace.accuracy.push_back(static_cast<double>(out.correct) /
                             static_cast<double>(batch.size()));
    if (!std::isfinite(out.loss)) {
      trace.diverged = true;
      return trace;
    }
    const double norm = grads.Norm();
    const double clip =
        norm > options.clip_norm && norm > 0.0 ? options.clip_norm / norm : 1.0;
    auto params = model.Parameters();
    auto gs = grads.All();
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto dst = params[p]->data();
      auto src = gs[p]->data();
      for (std::size_t x = 0; x < dst.size(); ++x) {
        dst[x] -= options.lr * clip * src[x];
      }
    }
  }
  trace.final_accuracy =
      EvaluateAccuracy(model, task, options.eval_samples, Mix64(options.seed));
  return trace;
}

void WriteTraceCsv(std::ostream& os, const TrainTrace& trace) {
  os << "step,loss,accuracy\n";
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(10);
  for (std::size_t s = 0; s < trace.loss.size(); ++s) {
    os << s << ',' << trace.loss[s] << ',' << trace.accuracy[s] << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace tatt
