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

#ifndef TATT_SPECTRUM_H_
#define TATT_SPECTRUM_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tatt/tensor.h"

namespace tatt {

// Block sizes {n_1..n_m} of a hierarchical Kronecker factorization of an
// n x n matrix, prod n_i = n.
class KroneckerScheme {
 public:
  explicit KroneckerScheme(std::vector<std::size_t> blocks);

  const std::vector<std::size_t>& blocks() const { return blocks_; }
  std::size_t order() const { return blocks_.size(); }
  std::size_t side() const { return side_; }

  // r * sum_i n_i^2: one flattened n_i x n_i factor per dimension and term.
  std::uint64_t ParamsForRank(std::size_t rank) const;

  // [n_1^2, .., n_m^2]
  Shape TensorShape() const;
  std::string ToString() const;

 private:
  std::vector<std::size_t> blocks_;
  std::size_t side_;
};

Tensor KroneckerProduct(const Tensor& a, const Tensor& b);

// Van Loan-Pitsianis rearrangement for m = 2:
// R[i * n_1 + j, k * n_2 + l] = A[i * n_2 + k, j * n_2 + l], so
// A = sum_r B_r (x) C_r  <=>  R = sum_r vec(B_r) vec(C_r)^T.
Tensor RearrangeForKronecker(const Tensor& a, const KroneckerScheme& scheme);
Tensor InverseRearrange(const Tensor& r, const KroneckerScheme& scheme);

// Order-m generalization: an [n_1^2, .., n_m^2] tensor whose mode-i index
// is (row digit i) * n_i + (column digit i) of A's mixed-radix indices.
Tensor RearrangeToTensor(const Tensor& a, const KroneckerScheme& scheme);
Tensor InverseRearrangeTensor(const Tensor& t, const KroneckerScheme& scheme);

struct CpOptions {
  std::size_t max_iters = 300;
  // Stop when the fit changes by less than this between sweeps.
  double tol = 1e-12;
  std::size_t restarts = 5;
  std::uint64_t seed = 0;
};

// T ~= sum_j weights[j] * (x)_i factors[i][:, j], factor columns unit norm.
struct CpDecomposition {
  std::vector<Tensor> factors;  // factors[i]: [I_i, r]
  std::vector<double> weights;
  double relative_error = 1.0;  // ||T - T_hat||_F / ||T||_F
  double fit = 0.0;             // 1 - relative_error
  std::size_t iterations = 0;
  bool converged = false;  // false: iteration cap hit, best-so-far returned
};

// Alternating least squares over mode unfoldings, keeping the best of
// `restarts` seeded random initializations. `warm_start`, if given, seeds
// one extra run (its columns are used first, any remaining are random).
CpDecomposition CpAls(const Tensor& t, std::size_t rank,
                      const CpOptions& options = {},
                      const CpDecomposition* warm_start = nullptr);

Tensor CpReconstruct(const CpDecomposition& cp, const Shape& shape);

struct SpectrumOptions {
  std::vector<double> energy_thresholds = {0.9, 0.99, 0.999, 0.9999};
  // Largest CP rank swept for order >= 3 schemes.
  std::size_t max_cp_rank = 6;
  CpOptions cp;
  // A rank r is "exact" once relative_error(r) <= rank_tol.
  double rank_tol = 1e-8;
  // When set, every report covers exactly ranks 1..max_rank (capped by the
  // available singular values) and the CP sweep does not stop early.
  std::optional<std::size_t> max_rank;
};

// One attention matrix decomposed in one space. Per-rank vectors are indexed
// by rank - 1.
struct SpectrumReport {
  std::string space;   // "vector" or "tensor-<m>"
  std::string scheme;  // "512" for vector space, "32x16" etc. otherwise
  std::size_t order = 1;
  std::vector<double> singular_values;  // sigma_j / sum sigma, descending
  std::vector<double> cum_energy;       // 1 - relative_error^2
  std::vector<double> relative_error;
  std::vector<std::uint64_t> params;
  std::vector<std::pair<double, std::optional<std::size_t>>> rank_for_energy;
  std::optional<std::size_t> exact_rank;

  std::size_t max_rank() const { return relative_error.size(); }
};

// Vector space via SVD of A (params r * n); tensor-2 via SVD of the
// rearranged matrix; tensor-m (m >= 3) via a CP-ALS rank sweep of the
// rearranged tensor (params r * sum n_i^2).
std::vector<SpectrumReport> AnalyzeAttention(
    const Tensor& a, std::span<const KroneckerScheme> schemes,
    const SpectrumOptions& options = {});

// Header: space,scheme,rank,sigma,cum_energy,params,rel_error
void WriteSpectrumCsv(std::ostream& os,
                      std::span<const SpectrumReport> reports);

}  // namespace tatt

#endif  // TATT_SPECTRUM_H_
