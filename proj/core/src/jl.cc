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

#include "tatt/jl.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include <boost/random/normal_distribution.hpp>

#include "tatt/linalg.h"
#include "tatt/parallel.h"
#include "tatt/tensor_ops.h"

namespace tatt {

TensorizedProjection::TensorizedProjection(std::size_t k,
                                           std::vector<std::size_t> dims,
                                           std::size_t rank, Engine& eng)
    : k_(k), n_(1), rank_(rank), dims_(std::move(dims)), term_stride_(0) {
  if (k_ == 0) throw Error("projection needs k >= 1");
  if (rank_ == 0) throw Error("projection needs rank >= 1");
  if (dims_.empty()) throw ShapeError("projection needs at least one dimension");
  for (std::size_t d : dims_) {
    if (d == 0) throw ShapeError("projection extents must be >= 1");
    factor_offset_.push_back(term_stride_);
    term_stride_ += d;
    n_ *= d;
  }
  const double m = static_cast<double>(dims_.size());
  const double stddev = std::pow(static_cast<double>(rank_), -0.5 / m);
  boost::random::normal_distribution<double> dist(0.0, stddev);
  factors_.resize(k_ * rank_ * term_stride_);
  for (auto& x : factors_) x = dist(eng);
  scale_ = 1.0 / std::sqrt(static_cast<double>(k_));
}

const double* TensorizedProjection::Factor(std::size_t row, std::size_t term,
                                           std::size_t mode) const {
  return factors_.data() + (row * rank_ + term) * term_stride_ +
         factor_offset_[mode];
}

void TensorizedProjection::Orthonormalize() {
  if (k_ > n_) throw Error("orthonormal projection needs k <= n");
  Tensor rows({k_, n_});
  for (std::size_t i = 0; i < k_; ++i) {
    const auto row = MaterializeRow(i);
    std::copy(row.begin(), row.end(), rows.data().begin() + i * n_);
  }
  Tensor q = OrthonormalizeRows(rows);
  if (q.extent(0) != k_) throw Error("drawn rows are linearly dependent");
  dense_ = std::move(q.storage());
  scale_ = 1.0;
}

void TensorizedProjection::AccumulateRow(std::size_t row, double coeff,
                                         std::span<double> out,
                                         std::vector<double>& scratch) const {
  if (orthonormal()) {
    const double* r = dense_.data() + row * n_;
    for (std::size_t x = 0; x < n_; ++x) out[x] += coeff * r[x];
    return;
  }
  scratch.resize(n_);
  const std::size_t m = dims_.size();
  for (std::size_t j = 0; j < rank_; ++j) {
    // Outer product of the factor vectors, first mode most significant.
    std::size_t len = dims_[0];
    const double* f0 = Factor(row, j, 0);
    for (std::size_t a = 0; a < len; ++a) scratch[a] = coeff * f0[a];
    if (m == 1) {
      for (std::size_t x = 0; x < n_; ++x) out[x] += scratch[x];
      continue;
    }
    for (std::size_t h = 1; h + 1 < m; ++h) {
      const std::size_t nh = dims_[h];
      const double* f = Factor(row, j, h);
      for (std::size_t p = len; p-- > 0;) {
        const double v = scratch[p];
        for (std::size_t b = nh; b-- > 0;) scratch[p * nh + b] = v * f[b];
      }
      len *= nh;
    }
    // Last mode goes straight into the output.
    const std::size_t nl = dims_[m - 1];
    const double* fl = Factor(row, j, m - 1);
    for (std::size_t p = 0; p < len; ++p) {
      const double v = scratch[p];
      double* dst = out.data() + p * nl;
      for (std::size_t b = 0; b < nl; ++b) dst[b] += v * fl[b];
    }
  }
}

double TensorizedProjection::RowInner(std::size_t row, std::span<const double> y,
                                      std::vector<double>& scratch) const {
  if (orthonormal()) {
    return Dot(std::span<const double>(dense_.data() + row * n_, n_), y);
  }
  const std::size_t m = dims_.size();
  double total = 0.0;
  scratch.resize(n_);
  for (std::size_t j = 0; j < rank_; ++j) {
    // Contract the last mode first: [.., n_m] . t_m -> [..].
    std::size_t len = n_;
    const double* src = y.data();
    for (std::size_t h = m; h-- > 0;) {
      const std::size_t nh = dims_[h];
      const double* f = Factor(row, j, h);
      const std::size_t outer = len / nh;
      for (std::size_t p = 0; p < outer; ++p) {
        const double* s = src + p * nh;
        double acc = 0.0;
        for (std::size_t b = 0; b < nh; ++b) acc += s[b] * f[b];
        scratch[p] = acc;
      }
      src = scratch.data();
      len = outer;
    }
    total += scratch[0];
  }
  return total;
}

std::vector<double> TensorizedProjection::MaterializeRow(std::size_t row) const {
  if (row >= k_) throw IndexError("projection row out of range");
  std::vector<double> out(n_, 0.0), scratch;
  AccumulateRow(row, 1.0, out, scratch);
  return out;
}

double TensorizedProjection::RowInnerTensorForm(std::size_t row,
                                                std::span<const double> y) const {
  if (row >= k_) throw IndexError("projection row out of range");
  if (y.size() != n_) throw ShapeError("vector length does not match projection");
  std::vector<double> scratch;
  return RowInner(row, y, scratch);
}

Tensor TensorizedProjection::Matrix() const {
  Tensor t({k_, n_});
  std::vector<double> scratch;
  for (std::size_t i = 0; i < k_; ++i) {
    AccumulateRow(i, scale_, t.data().subspan(i * n_, n_), scratch);
  }
  return t;
}

std::vector<double> TensorizedProjection::Apply(std::span<const double> y) const {
  if (y.size() != n_) throw ShapeError("vector length does not match projection");
  std::vector<double> out(k_), scratch;
  for (std::size_t i = 0; i < k_; ++i) out[i] = scale_ * RowInner(i, y, scratch);
  return out;
}

std::pair<std::vector<double>, std::vector<double>>
TensorizedProjection::ProjectAndLift(std::span<const double> y) const {
  if (y.size() != n_) throw ShapeError("vector length does not match projection");
  std::vector<double> ty(k_), lifted(n_, 0.0), scratch;
  for (std::size_t i = 0; i < k_; ++i) {
    ty[i] = scale_ * RowInner(i, y, scratch);
    AccumulateRow(i, scale_ * ty[i], lifted, scratch);
  }
  return {std::move(ty), std::move(lifted)};
}

TensorizedProjection BuildProjection(std::size_t k,
                                     std::vector<std::size_t> dims,
                                     std::size_t rank, std::uint64_t seed) {
  Engine eng = MakeEngine(seed, {0x50524F4AULL});
  return TensorizedProjection(k, std::move(dims), rank, eng);
}

double DistortionTrial(const TensorizedProjection& proj,
                       std::span<const double> y) {
  const double ny = Norm(y);
  if (ny == 0.0) throw Error("distortion of the zero vector is undefined");
  return std::abs(Norm(proj.Apply(y)) - ny) / ny;
}

double RecoveryResult::SuccessRateAt(double eps) const {
  if (error_ratios.empty()) return 0.0;
  const auto hits = std::count_if(error_ratios.begin(), error_ratios.end(),
                                  [eps](double r) { return r < eps; });
  return static_cast<double>(hits) / static_cast<double>(error_ratios.size());
}

double RecoveryResult::StdError() const {
  if (trials == 0) return 0.0;
  return std::sqrt(success_rate * (1.0 - success_rate) /
                   static_cast<double>(trials));
}

namespace {

std::vector<double> MatVec(const Tensor& a, std::span<const double> x) {
  const std::size_t n = a.extent(0), c = a.extent(1);
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = a.data().data() + i * c;
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

}  // namespace

RecoveryResult RecoveryExperiment(const Tensor& a,
                                  std::span<const std::size_t> dims,
                                  std::size_t rank, std::size_t k,
                                  double epsilon, std::size_t trials,
                                  std::uint64_t seed,
                                  const RecoveryOptions& options) {
  if (a.rank() != 2 || a.extent(0) != a.extent(1)) {
    throw ShapeError("recovery experiment needs a square matrix");
  }
  const std::size_t n = a.extent(0);
  if (ShapeProduct(dims) != n) {
    throw ShapeError("scheme does not factor the matrix side");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = a.data().subspan(i * n, n);
    if (std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; })) {
      throw Error("degenerate attention matrix: row " + std::to_string(i) +
                  " is zero");
    }
  }
  if (trials == 0) throw Error("need at least one trial");

  RecoveryResult res;
  res.n = n;
  res.m = dims.size();
  res.r = rank;
  res.k = k;
  res.epsilon = epsilon;
  res.trials = trials;
  res.seed = seed;
  res.rank_bound = std::min(k, n);
  res.error_ratios.assign(trials, 0.0);
  std::vector<double> distortion(trials, 0.0);

  const std::vector<std::size_t> dim_vec(dims.begin(), dims.end());
  ParallelFor(trials, options.threads, [&](std::size_t t) {
    Engine eng = MakeEngine(seed, {k, t});
    TensorizedProjection proj(k, dim_vec, rank, eng);
    if (options.orthonormal) proj.Orthonormalize();
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> y(n);
    double ny = 0.0;
    do {
      for (auto& v : y) v = g(eng);
      ny = Norm(y);
    } while (ny == 0.0);
    for (auto& v : y) v /= ny;

    auto [ty, lifted] = proj.ProjectAndLift(y);
    const std::vector<double> ay = MatVec(a, y);
    const std::vector<double> a_lifted = MatVec(a, lifted);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = a_lifted[i] - ay[i];
      err += d * d;
    }
    const double nay = Norm(ay);
    res.error_ratios[t] = nay > 0.0 ? std::sqrt(err) / nay
                                    : std::numeric_limits<double>::infinity();
    distortion[t] = std::abs(Norm(ty) - 1.0);
  });

  res.success_rate = res.SuccessRateAt(epsilon);
  res.mean_distortion =
      std::accumulate(distortion.begin(), distortion.end(), 0.0) /
      static_cast<double>(trials);
  return res;
}

KSweep SweepK(const Tensor& a, std::span<const std::size_t> dims,
              std::size_t rank, std::span<const std::size_t> ks,
              double epsilon, std::size_t trials, std::uint64_t seed,
              double target, bool full, const RecoveryOptions& options) {
  KSweep sweep;
  for (std::size_t k : ks) {
    sweep.points.push_back(
        RecoveryExperiment(a, dims, rank, k, epsilon, trials, seed, options));
    if (!sweep.min_k && sweep.points.back().success_rate >= target) {
      sweep.min_k = k;
      if (!full) break;
    }
  }
  return sweep;
}

std::vector<std::size_t> DoublingGrid(std::size_t start, std::size_t stop) {
  std::vector<std::size_t> ks;
  for (std::size_t k = std::max<std::size_t>(start, 1); k <= stop; k *= 2) {
    ks.push_back(k);
  }
  return ks;
}

Tensor SyntheticAttention(std::size_t n, std::uint64_t seed,
                          double temperature) {
  Engine eng = MakeEngine(seed, {0x41545453ULL, n});
  Tensor scores = RandomNormal({n, n}, eng, temperature);
  return SoftmaxLastAxis(scores);
}

void WriteJlCsv(std::ostream& os, std::span<const RecoveryResult> points) {
  os << "n,m,r,k,epsilon,trials,success_rate,mean_distortion,seed\n";
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(10);
  for (const auto& p : points) {
    os << p.n << ',' << p.m << ',' << p.r << ',' << p.k << ',' << p.epsilon
       << ',' << p.trials << ',' << p.success_rate << ',' << p.mean_distortion
       << ',' << p.seed << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace tatt
