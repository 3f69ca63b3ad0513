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

#ifndef TATT_JL_H_
#define TATT_JL_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "tatt/random.h"
#include "tatt/tensor.h"

namespace tatt {

// k x n random projection whose rows are rank-r order-m tensors
// t^(i) = sum_{j<r} (x)_h t^(i)_{h,j}, factor entries i.i.d. N(0, r^(-1/m)).
// The applied map is T = rows / sqrt(k), so E ||T y||^2 = ||y||^2.
class TensorizedProjection {
 public:
  TensorizedProjection(std::size_t k, std::vector<std::size_t> dims,
                       std::size_t rank, Engine& eng);

  // Debug isometry: rows replaced by an orthonormal basis of the drawn rows
  // (requires k <= n) and the 1/sqrt(k) scaling dropped, so T T^T = I.
  void Orthonormalize();

  std::size_t rows() const { return k_; }
  std::size_t length() const { return n_; }
  std::size_t rank() const { return rank_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  bool orthonormal() const { return !dense_.empty(); }
  double scale() const { return scale_; }

  // Unscaled row t^(i) of length n.
  std::vector<double> MaterializeRow(std::size_t row) const;

  // <t^(i), y> as the full inner product <T^(i), Y> of the tensorized row
  // and tensorized y, contracting one factor vector per mode. Unscaled.
  double RowInnerTensorForm(std::size_t row, std::span<const double> y) const;

  // T (as applied, including scaling) materialized: [k, n].
  Tensor Matrix() const;

  std::vector<double> Apply(std::span<const double> y) const;

  // Returns (T y, T^T T y), streaming rows.
  std::pair<std::vector<double>, std::vector<double>> ProjectAndLift(
      std::span<const double> y) const;

 private:
  const double* Factor(std::size_t row, std::size_t term, std::size_t mode) const;
  double RowInner(std::size_t row, std::span<const double> y,
                  std::vector<double>& scratch) const;
  void AccumulateRow(std::size_t row, double coeff, std::span<double> out,
                     std::vector<double>& scratch) const;

  std::size_t k_, n_, rank_;
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> factor_offset_;  // start of mode h within a term
  std::size_t term_stride_;                 // sum_h n_h
  std::vector<double> factors_;             // [k][rank][sum_h n_h]
  std::vector<double> dense_;               // orthonormal rows, [k][n]
  double scale_;
};

TensorizedProjection BuildProjection(std::size_t k,
                                     std::vector<std::size_t> dims,
                                     std::size_t rank, std::uint64_t seed);

// | ||T y|| - ||y|| | / ||y||. Throws for y = 0.
double DistortionTrial(const TensorizedProjection& proj,
                       std::span<const double> y);

struct RecoveryOptions {
  bool orthonormal = false;  // debug isometry projections
  std::size_t threads = 1;
};

// One (n, m, r, k, epsilon) point: per trial a fresh projection T and unit
// y; success iff ||A T^T T y - A y|| < epsilon ||A y||.
struct RecoveryResult {
  std::size_t n = 0, m = 0, r = 0, k = 0;
  double epsilon = 0.0;
  std::size_t trials = 0;
  double success_rate = 0.0;
  double mean_distortion = 0.0;  // of ||T y|| vs ||y||
  std::uint64_t seed = 0;
  std::size_t rank_bound = 0;  // rank(A T^T T) <= min(k, n)
  // ||A~ y - A y|| / ||A y|| per trial, so other epsilons can be evaluated on
  // the same draws.
  std::vector<double> error_ratios;

  double SuccessRateAt(double eps) const;
  // Binomial standard error of success_rate.
  double StdError() const;
};

RecoveryResult RecoveryExperiment(const Tensor& a,
                                  std::span<const std::size_t> dims,
                                  std::size_t rank, std::size_t k,
                                  double epsilon, std::size_t trials,
                                  std::uint64_t seed,
                                  const RecoveryOptions& options = {});

struct KSweep {
  std::vector<RecoveryResult> points;
  std::optional<std::size_t> min_k;  // first k with success >= target
};

// Evaluates ks in order; stops after the first k reaching `target` unless
// `full` is set.
KSweep SweepK(const Tensor& a, std::span<const std::size_t> dims,
              std::size_t rank, std::span<const std::size_t> ks,
              double epsilon, std::size_t trials, std::uint64_t seed,
              double target = 0.9, bool full = false,
              const RecoveryOptions& options = {});

// Powers of two from `start` up to and including `stop`.
std::vector<std::size_t> DoublingGrid(std::size_t start, std::size_t stop);

// Row-stochastic softmax of scaled Gaussian scores; a generic dense
// attention matrix for experiments.
Tensor SyntheticAttention(std::size_t n, std::uint64_t seed,
                          double temperature = 1.0);

// Header: n,m,r,k,epsilon,trials,success_rate,mean_distortion,seed
void WriteJlCsv(std::ostream& os, std::span<const RecoveryResult> points);

}  // namespace tatt

#endif  // TATT_JL_H_
