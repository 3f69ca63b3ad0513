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

#ifndef TATT_LINALG_H_
#define TATT_LINALG_H_

#include <cstddef>
#include <span>
#include <vector>

#include "tatt/tensor.h"

namespace tatt {

// Thin SVD, M = U diag(sigma) V^T with k = min(p, q).
struct Svd {
  Tensor u;                    // [p, k], orthonormal columns
  std::vector<double> sigma;   // descending, >= 0
  Tensor v;                    // [q, k], orthonormal columns
};

struct SvdOptions {
  bool compute_vectors = true;
  std::size_t max_sweeps = 80;
  // A column pair is rotated while |<a_i, a_j>| > tol * |a_i| |a_j|.
  // 0 selects machine epsilon times the column length.
  double tol = 0.0;
};

// One-sided (Hestenes) Jacobi SVD. Throws ConvergenceError if the pair
// rotations have not settled after max_sweeps.
Svd SvdDescending(const Tensor& m, const SvdOptions& options = {});

std::vector<double> SingularValues(const Tensor& m);

// Number of sigma_j > rtol * sigma_0.
std::size_t NumericalRank(std::span<const double> sigma, double rtol = 1e-10);

Tensor Matmul(const Tensor& a, const Tensor& b);
Tensor Transpose(const Tensor& a);
Tensor PseudoInverse(const Tensor& m, double rcond = 1e-12);

// Modified Gram-Schmidt with reorthogonalization. Rows that collapse to
// (numerically) zero are dropped, so the result may have fewer rows.
Tensor OrthonormalizeRows(const Tensor& m);

double FrobeniusNorm(const Tensor& t);
double Norm(std::span<const double> x);
double Dot(std::span<const double> a, std::span<const double> b);

}  // namespace tatt

#endif  // TATT_LINALG_H_
