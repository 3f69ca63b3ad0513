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

#include "tatt/linalg.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace tatt {

namespace {

void Require2D(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(what) + " expects a matrix, got " +
                     ShapeToString(t.shape()));
  }
}

// Fills zero columns of `cols` (each of length p) with unit vectors
// orthogonal to every other column.
void CompleteBasis(std::vector<std::vector<double>>& cols, std::size_t p) {
  std::size_t probe = 0;
  for (auto& c : cols) {
    if (Norm(c) > 0.0) continue;
    while (probe < p) {
      std::vector<double> e(p, 0.0);
      e[probe++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& other : cols) {
          if (&other == &c || Norm(other) == 0.0) continue;
          const double proj = Dot(e, other);
          for (std::size_t i = 0; i < p; ++i) e[i] -= proj * other[i];
        }
      }
      const double nrm = Norm(e);
      if (nrm > 1e-8) {
        for (auto& x : e) x /= nrm;
        c = std::move(e);
        break;
      }
    }
  }
}

}  // namespace

double Norm(std::span<const double> x) { return std::sqrt(Dot(x, x)); }

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double FrobeniusNorm(const Tensor& t) { return Norm(t.data()); }

Svd SvdDescending(const Tensor& m, const SvdOptions& options) {
  Require2D(m, "svd");
  for (double x : m.data()) {
    if (!std::isfinite(x)) throw Error("svd input has non-finite entries");
  }
  const bool transposed = m.extent(0) < m.extent(1);
  const Tensor& a = m;
  const std::size_t p = transposed ? a.extent(1) : a.extent(0);
  const std::size_t q = transposed ? a.extent(0) : a.extent(1);

  // Columns of the (possibly transposed) matrix, stored contiguously.
  std::vector<std::vector<double>> w(q, std::vector<double>(p));
  for (std::size_t r = 0; r < a.extent(0); ++r) {
    for (std::size_t c = 0; c < a.extent(1); ++c) {
      const double x = a.at({r, c});
      if (transposed) {
        w[r][c] = x;
      } else {
        w[c][r] = x;
      }
    }
  }
  std::vector<std::vector<double>> v;
  if (options.compute_vectors) {
    v.assign(q, std::vector<double>(q, 0.0));
    for (std::size_t i = 0; i < q; ++i) v[i][i] = 1.0;
  }
  std::vector<double> norm2(q);
  double frob2 = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    norm2[i] = Dot(w[i], w[i]);
    frob2 += norm2[i];
  }
  // Columns at roundoff level relative to the whole matrix carry no
  // information; rotating them against each other never settles.
  const double eps = std::numeric_limits<double>::epsilon();
  const double negligible2 = eps * eps * frob2;

  const double tol = options.tol > 0.0
                        ? options.tol
                        : std::numeric_limits<double>::epsilon() *
                              static_cast<double>(std::max<std::size_t>(p, 8));
  bool converged = false;
  for (std::size_t sweep = 0; sweep < options.max_sweeps && !converged;
       ++sweep) {
    converged = true;
    for (std::size_t i = 0; i + 1 < q; ++i) {
      for (std::size_t j = i + 1; j < q; ++j) {
        const double alpha = norm2[i], beta = norm2[j];
        if (alpha <= negligible2 || beta <= negligible2) continue;
        const double gamma = Dot(w[i], w[j]);
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        auto rotate = [c, s](std::vector<double>& x, std::vector<double>& y) {
          for (std::size_t k = 0; k < x.size(); ++k) {
            const double xi = x[k], yi = y[k];
            x[k] = c * xi - s * yi;
            y[k] = s * xi + c * yi;
          }
        };
        rotate(w[i], w[j]);
        if (options.compute_vectors) rotate(v[i], v[j]);
        norm2[i] = Dot(w[i], w[i]);
        norm2[j] = Dot(w[j], w[j]);
      }
    }
  }
  if (!converged) {
    throw ConvergenceError("Jacobi SVD did not converge in " +
                           std::to_string(options.max_sweeps) + " sweeps");
  }

  std::vector<std::size_t> idx(q);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> sig(q);
  for (std::size_t i = 0; i < q; ++i) sig[i] = std::sqrt(norm2[i]);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t x, std::size_t y) { return sig[x] > sig[y]; });

  Svd out;
  out.sigma.resize(q);
  for (std::size_t k = 0; k < q; ++k) out.sigma[k] = sig[idx[k]];
  if (!options.compute_vectors) return out;

  std::vector<std::vector<double>> left(q), right(q);
  for (std::size_t k = 0; k < q; ++k) {
    left[k] = w[idx[k]];
    right[k] = v[idx[k]];
    const double sk = out.sigma[k];
    if (sk * sk > negligible2 && sk > 1e-300) {
      for (auto& x : left[k]) x /= sk;
    } else {
      std::fill(left[k].begin(), left[k].end(), 0.0);
    }
  }
  CompleteBasis(left, p);

  // Undo the transpose: M = W diag(s) V^T  <=>  M^T = V diag(s) W^T.
  const auto& ucols = transposed ? right : left;
  const auto& vcols = transposed ? left : right;
  const std::size_t rows_u = m.extent(0), rows_v = m.extent(1);
  out.u = Tensor({rows_u, q});
  out.v = Tensor({rows_v, q});
  for (std::size_t k = 0; k < q; ++k) {
    for (std::size_t r = 0; r < rows_u; ++r) out.u.at({r, k}) = ucols[k][r];
    for (std::size_t r = 0; r < rows_v; ++r) out.v.at({r, k}) = vcols[k][r];
  }
  return out;
}

std::vector<double> SingularValues(const Tensor& m) {
  SvdOptions opts;
  opts.compute_vectors = false;
  return SvdDescending(m, opts).sigma;
}

std::size_t NumericalRank(std::span<const double> sigma, double rtol) {
  if (sigma.empty() || sigma[0] == 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(sigma.begin(), sigma.end(),
                    [&](double s) { return s > rtol * sigma[0]; }));
}

Tensor Matmul(const Tensor& a, const Tensor& b) {
  Require2D(a, "matmul");
  Require2D(b, "matmul");
  const std::size_t p = a.extent(0), q = a.extent(1), r = b.extent(1);
  if (b.extent(0) != q) {
    throw ShapeError("matmul shape mismatch " + ShapeToString(a.shape()) +
                     " x " + ShapeToString(b.shape()));
  }
  Tensor out({p, r});
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a.data()[i * q + k];
      if (aik == 0.0) continue;
      const double* brow = b.data().data() + k * r;
      double* orow = out.data().data() + i * r;
      for (std::size_t j = 0; j < r; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Tensor Transpose(const Tensor& a) {
  Require2D(a, "transpose");
  Tensor out({a.extent(1), a.extent(0)});
  for (std::size_t i = 0; i < a.extent(0); ++i) {
    for (std::size_t j = 0; j < a.extent(1); ++j) out.at({j, i}) = a.at({i, j});
  }
  return out;
}

Tensor PseudoInverse(const Tensor& m, double rcond) {
  const Svd svd = SvdDescending(m);
  const std::size_t p = m.extent(0), q = m.extent(1), k = svd.sigma.size();
  const double cutoff = svd.sigma.empty() ? 0.0 : rcond * svd.sigma[0];
  Tensor out({q, p});
  for (std::size_t s = 0; s < k; ++s) {
    if (svd.sigma[s] <= cutoff || svd.sigma[s] == 0.0) continue;
    const double inv = 1.0 / svd.sigma[s];
    for (std::size_t i = 0; i < q; ++i) {
      const double vi = svd.v.at({i, s}) * inv;
      for (std::size_t j = 0; j < p; ++j) out.at({i, j}) += vi * svd.u.at({j, s});
    }
  }
  return out;
}

Tensor OrthonormalizeRows(const Tensor& m) {
  Require2D(m, "orthonormalize");
  const std::size_t rows = m.extent(0), cols = m.extent(1);
  std::vector<std::vector<double>> basis;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> x(m.data().begin() + r * cols,
                          m.data().begin() + (r + 1) * cols);
    const double original = Norm(x);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        const double proj = Dot(x, b);
        for (std::size_t c = 0; c < cols; ++c) x[c] -= proj * b[c];
      }
    }
    const double nrm = Norm(x);
    if (nrm <= 1e-10 * std::max(original, 1e-300)) continue;
    for (auto& v : x) v /= nrm;
    basis.push_back(std::move(x));
  }
  if (basis.empty()) throw Error("orthonormalize: all rows are zero");
  Tensor out({basis.size(), cols});
  for (std::size_t r = 0; r < basis.size(); ++r) {
    std::copy(basis[r].begin(), basis[r].end(), out.data().begin() + r * cols);
  }
  return out;
}

}  // namespace tatt
