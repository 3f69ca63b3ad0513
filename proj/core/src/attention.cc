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

#include "tatt/attention.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tatt/parallel.h"

namespace tatt {

namespace {

constexpr std::size_t kTile = 64;

void RequireSameShape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " +
                     ShapeToString(a.shape()) + " vs " +
                     ShapeToString(b.shape()));
  }
}

void RequireSchemeShape(const Tensor& t, const TensorizationScheme& scheme,
                        const char* what) {
  Shape expect = scheme.dims();
  expect.push_back(t.shape().back());
  if (t.shape() != expect || t.shape().back() != scheme.feature_dim()) {
    throw ShapeError(std::string(what) + " has shape " +
                     ShapeToString(t.shape()) + ", scheme expects " +
                     ShapeToString(scheme.tensor_shape()));
  }
}

std::vector<std::size_t> ResolveOrder(const AttentionOptions& options,
                                      std::size_t m) {
  if (options.update_order.empty()) {
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    return order;
  }
  std::vector<std::size_t> sorted = options.update_order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted.size() != m || sorted[i] != i) {
      throw IndexError("update order must be a permutation of 0..m-1");
    }
  }
  return options.update_order;
}

std::vector<std::int64_t> Iota(std::size_t n) {
  std::vector<std::int64_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

// Sequential-mode RoPE acts on the whole [n, d] sequence before
// tensorization.
Tensor RotateSequence(const Tensor& t, const RopeConfig& cfg,
                      RopeDirection dir) {
  const Tensor seq = Sequentialize(t);
  return ApplyRope(seq, Iota(seq.extent(0)), cfg, dir).Reshaped(t.shape());
}

bool SequentialRope(const AttentionOptions& o) {
  return o.rope && o.rope->mode == RopeMode::kSequential;
}
bool PerDimRope(const AttentionOptions& o) {
  return o.rope && o.rope->mode == RopeMode::kPerDimension;
}

// scale * Q K^T for each fiber, accumulated in kTile x kTile blocks.
Tensor ScoreBlocks(const Tensor& qf, const Tensor& kf, double scale,
                   std::size_t threads) {
  const std::size_t batch = qf.extent(0), len = qf.extent(1), d = qf.extent(2);
  Tensor scores({batch, len, len});
  ParallelFor(batch, threads, [&](std::size_t b) {
    const double* Q = qf.data().data() + b * len * d;
    const double* K = kf.data().data() + b * len * d;
    double* S = scores.data().data() + b * len * len;
    for (std::size_t r0 = 0; r0 < len; r0 += kTile) {
      const std::size_t r1 = std::min(len, r0 + kTile);
      for (std::size_t c0 = 0; c0 < len; c0 += kTile) {
        const std::size_t c1 = std::min(len, c0 + kTile);
        for (std::size_t r = r0; r < r1; ++r) {
          const double* qrow = Q + r * d;
          for (std::size_t c = c0; c < c1; ++c) {
            const double* krow = K + c * d;
            double acc = 0.0;
            for (std::size_t f = 0; f < d; ++f) acc += qrow[f] * krow[f];
            S[r * len + c] = acc * scale;
          }
        }
      }
    }
  });
  return scores;
}

struct StageInputs {
  Tensor q, k;
};

StageInputs FlattenQueriesKeys(const Tensor& q, const Tensor& k,
                               std::size_t dim,
                               const TensorizationScheme& scheme,
                               const AttentionOptions& options) {
  const std::size_t m = scheme.order();
  StageInputs s{ModeFlatten(q, dim, m), ModeFlatten(k, dim, m)};
  if (PerDimRope(options)) {
    auto [qr, kr] = ApplyTensorizedRope(s.q, s.k, dim, scheme, *options.rope);
    s.q = std::move(qr);
    s.k = std::move(kr);
  }
  return s;
}

Tensor StageWeights(const StageInputs& in, std::size_t dim,
                    const DimMask& masks, const AttentionOptions& options) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(in.q.extent(2)));
  Tensor scores = ScoreBlocks(in.q, in.k, scale, options.threads);
  return SoftmaxLastAxis(scores, masks.ForDim(dim), options.policy);
}

void Validate(const Tensor& q, const Tensor& k, const Tensor& v,
              const TensorizationScheme& scheme, const DimMask& masks,
              const AttentionOptions& options) {
  RequireSchemeShape(q, scheme, "Q");
  RequireSameShape(q, k, "Q/K");
  RequireSameShape(q, v, "Q/V");
  if (masks.order() != scheme.order()) {
    throw ShapeError("mask order does not match scheme order");
  }
  masks.Validate(scheme, options.policy);
  if (options.rope) {
    options.rope->Validate();
    if (options.rope->head_dim != scheme.feature_dim()) {
      throw ShapeError("RoPE head_dim does not match feature dimension");
    }
  }
}

}  // namespace

DimMask DimMask::HierarchicalCausal(const TensorizationScheme& scheme) {
  DimMask masks(scheme.order());
  for (std::size_t i = 0; i < scheme.order(); ++i) {
    const std::size_t n = scheme.dim(i);
    BoolTensor tri({n, n}, 0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c <= r; ++c) tri.at({r, c}) = 1;
    }
    masks.Set(i, std::move(tri));
  }
  return masks;
}

void DimMask::Set(std::size_t dim, BoolTensor mask) {
  if (dim >= per_dim_.size()) throw IndexError("mask dimension out of range");
  if (mask.rank() != 2 && mask.rank() != 3) {
    throw ShapeError("dimension mask must be [n_i, n_i] or [B, n_i, n_i]");
  }
  per_dim_[dim] = std::move(mask);
}

void DimMask::Clear(std::size_t dim) { per_dim_.at(dim).reset(); }

const BoolTensor* DimMask::ForDim(std::size_t dim) const {
  const auto& entry = per_dim_.at(dim);
  return entry ? &*entry : nullptr;
}

void DimMask::Validate(const TensorizationScheme& scheme,
                       MaskPolicy policy) const {
  if (order() != scheme.order()) {
    throw ShapeError("mask order does not match scheme order");
  }
  for (std::size_t i = 0; i < order(); ++i) {
    const BoolTensor* mask = ForDim(i);
    if (!mask) continue;
    const std::size_t n = scheme.dim(i);
    const Shape& s = mask->shape();
    const bool shared = s.size() == 2 && s[0] == n && s[1] == n;
    const bool batched = s.size() == 3 && s[0] == scheme.batch(i) &&
                         s[1] == n && s[2] == n;
    if (!shared && !batched) {
      throw ShapeError("mask for dimension " + std::to_string(i) + " has shape " +
                       ShapeToString(s));
    }
    if (policy != MaskPolicy::kStrict) continue;
    const std::size_t rows = mask->size() / n;
    for (std::size_t r = 0; r < rows; ++r) {
      const auto row = mask->data().subspan(r * n, n);
      if (std::none_of(row.begin(), row.end(), [](auto x) { return x != 0; })) {
        throw MaskError("dimension " + std::to_string(i) + " mask row " +
                        std::to_string(r) + " is fully masked");
      }
    }
  }
}

Tensor FullAttention(const Tensor& q, const Tensor& k, const Tensor& v,
                     const BoolTensor* mask, MaskPolicy policy) {
  if (q.rank() != 2) throw ShapeError("full attention expects [n, d] inputs");
  RequireSameShape(q, k, "q/k");
  RequireSameShape(q, v, "q/v");
  const std::size_t n = q.extent(0), d = q.extent(1);
  if (mask && mask->shape() != Shape{n, n}) {
    throw ShapeError("full attention mask must be [n, n]");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor out({n, d});
  std::vector<double> scores(kTile * n);
  for (std::size_t r0 = 0; r0 < n; r0 += kTile) {
    const std::size_t rows = std::min(kTile, n - r0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* qrow = q.data().data() + (r0 + r) * d;
      double* srow = scores.data() + r * n;
      for (std::size_t c = 0; c < n; ++c) {
        const double* krow = k.data().data() + c * d;
        double acc = 0.0;
        for (std::size_t f = 0; f < d; ++f) acc += qrow[f] * krow[f];
        srow[c] = acc * scale;
      }
      const std::uint8_t* allow =
          mask ? mask->data().data() + (r0 + r) * n : nullptr;
      if (!detail::SoftmaxRow(srow, allow, n) &&
          policy == MaskPolicy::kStrict) {
        throw MaskError("attention row " + std::to_string(r0 + r) +
                        " is fully masked");
      }
      double* orow = out.data().data() + (r0 + r) * d;
      for (std::size_t c = 0; c < n; ++c) {
        const double w = srow[c];
        if (w == 0.0) continue;
        const double* vrow = v.data().data() + c * d;
        for (std::size_t f = 0; f < d; ++f) orow[f] += w * vrow[f];
      }
    }
  }
  return out;
}

AttentionResult TensorizedAttentionForward(const Tensor& q, const Tensor& k,
                                           const Tensor& v,
                                           const TensorizationScheme& scheme,
                                           const DimMask& masks,
                                           const AttentionOptions& options) {
  Validate(q, k, v, scheme, masks, options);
  const std::size_t m = scheme.order();

  AttentionResult result;
  AttentionIntermediates& inter = result.intermediates;
  inter.update_order = ResolveOrder(options, m);

  Tensor q_in = q, k_in = k;
  if (SequentialRope(options)) {
    q_in = RotateSequence(q, *options.rope, RopeDirection::kForward);
    k_in = RotateSequence(k, *options.rope, RopeDirection::kForward);
  }

  Tensor o = v;
  inter.values.push_back(o);
  for (std::size_t dim : inter.update_order) {
    StageInputs in = FlattenQueriesKeys(q_in, k_in, dim, scheme, options);
    Tensor weights = StageWeights(in, dim, masks, options);
    Tensor of = BatchedMatmul(weights, ModeFlatten(o, dim, m));
    o = ModeFold(of, dim, o.shape(), m);

    inter.weights.push_back(std::move(weights));
    inter.queries.push_back(std::move(in.q));
    inter.keys.push_back(std::move(in.k));
    inter.values.push_back(o);
  }
  result.output = std::move(o);
  return result;
}

Tensor CompositeOperator(const Tensor& q, const Tensor& k,
                         const TensorizationScheme& scheme,
                         const DimMask& masks,
                         const AttentionOptions& options) {
  const std::size_t n = scheme.sequence_length();
  if (n > kCompositeMaxLength) {
    throw SizeGuardError("composite operator needs n <= " +
                         std::to_string(kCompositeMaxLength) + ", got " +
                         std::to_string(n));
  }
  Validate(q, k, q, scheme, masks, options);
  const std::size_t m = scheme.order();
  const std::vector<std::size_t> order = ResolveOrder(options, m);

  Tensor q_in = q, k_in = k;
  if (SequentialRope(options)) {
    q_in = RotateSequence(q, *options.rope, RopeDirection::kForward);
    k_in = RotateSequence(k, *options.rope, RopeDirection::kForward);
  }

  // C starts as I; each stage left-multiplies by its scattered block map G,
  // G[g(b, r), g(b, c)] = A[b, r, c], with g the global token index.
  Tensor composite({n, n});
  for (std::size_t t = 0; t < n; ++t) composite.at({t, t}) = 1.0;
  Tensor next({n, n});

  for (std::size_t dim : order) {
    const Tensor weights =
        StageWeights(FlattenQueriesKeys(q_in, k_in, dim, scheme, options), dim,
                     masks, options);
    const std::size_t len = scheme.dim(dim);
    std::size_t outer = 1, inner = 1;
    for (std::size_t j = 0; j < dim; ++j) outer *= scheme.dim(j);
    for (std::size_t j = dim + 1; j < m; ++j) inner *= scheme.dim(j);
    auto global = [&](std::size_t a, std::size_t pos, std::size_t c) {
      return (a * len + pos) * inner + c;
    };

    std::fill(next.storage().begin(), next.storage().end(), 0.0);
    for (std::size_t a = 0; a < outer; ++a) {
      for (std::size_t c = 0; c < inner; ++c) {
        const double* A = weights.data().data() + (a * inner + c) * len * len;
        for (std::size_t r = 0; r < len; ++r) {
          double* dst = next.data().data() + global(a, r, c) * n;
          for (std::size_t s = 0; s < len; ++s) {
            const double w = A[r * len + s];
            if (w == 0.0) continue;
            const double* src = composite.data().data() + global(a, s, c) * n;
            for (std::size_t col = 0; col < n; ++col) dst[col] += w * src[col];
          }
        }
      }
    }
    std::swap(composite, next);
  }
  return composite;
}

AttentionGradients TensorizedAttentionBackward(
    const Tensor& d_output, const Tensor& q, const Tensor& k, const Tensor& v,
    const AttentionIntermediates& inter, const TensorizationScheme& scheme,
    const DimMask& masks, const AttentionOptions& options) {
  Validate(q, k, v, scheme, masks, options);
  RequireSameShape(d_output, v, "dO/V");
  const std::size_t m = scheme.order();
  if (inter.update_order.size() != m || inter.weights.size() != m ||
      inter.queries.size() != m || inter.keys.size() != m ||
      inter.values.size() != m + 1 ||
      inter.update_order != ResolveOrder(options, m) ||
      inter.values.front() != v) {
    throw ShapeError("intermediates do not belong to this forward call");
  }
  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t dim = inter.update_order[s];
    const Shape expect{scheme.batch(dim), scheme.dim(dim), scheme.dim(dim)};
    if (inter.weights[s].shape() != expect) {
      throw ShapeError("intermediate weights have the wrong shape");
    }
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(scheme.feature_dim()));
  AttentionGradients grads{Tensor(q.shape()), Tensor(k.shape()), Tensor()};
  Tensor d_cur = d_output;

  for (std::size_t s = m; s-- > 0;) {
    const std::size_t dim = inter.update_order[s];
    const Tensor& a = inter.weights[s];
    const Tensor g = ModeFlatten(d_cur, dim, m);
    const Tensor o_in = ModeFlatten(inter.values[s], dim, m);

    // O_out = A O_in  =>  dO_in = A^T G,  dA = G O_in^T.
    const Tensor d_in = BatchedMatmulTransA(a, g);
    Tensor d_scores = BatchedMatmulTransB(g, o_in);

    // Softmax Jacobian per row: dS = A o (dA - <dA, A>_row).
    const std::size_t len = a.extent(2);
    const std::size_t rows = a.size() / len;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* arow = a.data().data() + r * len;
      double* drow = d_scores.data().data() + r * len;
      double dot = 0.0;
      for (std::size_t c = 0; c < len; ++c) dot += arow[c] * drow[c];
      for (std::size_t c = 0; c < len; ++c) {
        drow[c] = arow[c] * (drow[c] - dot) * scale;
      }
    }

    Tensor dq = BatchedMatmul(d_scores, inter.keys[s]);
    Tensor dk = BatchedMatmulTransA(d_scores, inter.queries[s]);
    if (PerDimRope(options)) {
      auto [dq_r, dk_r] = ApplyTensorizedRope(dq, dk, dim, scheme,
                                              *options.rope,
                                              RopeDirection::kInverse);
      dq = std::move(dq_r);
      dk = std::move(dk_r);
    }
    const Tensor dq_t = ModeFold(dq, dim, q.shape(), m);
    const Tensor dk_t = ModeFold(dk, dim, k.shape(), m);
    for (std::size_t x = 0; x < q.size(); ++x) {
      grads.dq[x] += dq_t[x];
      grads.dk[x] += dk_t[x];
    }
    d_cur = ModeFold(d_in, dim, v.shape(), m);
  }
  grads.dv = std::move(d_cur);

  if (SequentialRope(options)) {
    grads.dq = RotateSequence(grads.dq, *options.rope, RopeDirection::kInverse);
    grads.dk = RotateSequence(grads.dk, *options.rope, RopeDirection::kInverse);
  }
  return grads;
}

FlopCount FlopEstimate(const TensorizationScheme& scheme,
                       AttentionVariant variant) {
  const std::uint64_t n = scheme.sequence_length();
  const std::uint64_t d = scheme.feature_dim();
  FlopCount count;
  if (variant == AttentionVariant::kFull) {
    count.scores = n * n * d;
    count.softmax = n * n;
    count.update = n * n * d;
    return count;
  }
  for (std::size_t n_i : scheme.dims()) {
    // (n / n_i) fibers, each an n_i x n_i block.
    count.scores += n * n_i * d;
    count.softmax += n * n_i;
    count.update += n * n_i * d;
  }
  return count;
}

}  // namespace tatt
