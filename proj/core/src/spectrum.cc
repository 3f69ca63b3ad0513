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

#include "tatt/spectrum.h"

#include <algorithm>
#include <functional>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "tatt/linalg.h"
#include "tatt/random.h"

namespace tatt {

namespace {

void RequireSquare(const Tensor& a, std::size_t side) {
  if (a.rank() != 2 || a.extent(0) != a.extent(1)) {
    throw ShapeError("expected a square matrix, got " + ShapeToString(a.shape()));
  }
  if (a.extent(0) != side) {
    throw ShapeError("matrix side " + std::to_string(a.extent(0)) +
                     " does not factor as the scheme (product " +
                     std::to_string(side) + ")");
  }
}

// Per-row and per-column offsets into the rearranged tensor; the flat index
// of A[r, c] is row_off[r] + col_off[c].
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> RearrangeOffsets(
    const KroneckerScheme& scheme) {
  const auto& blocks = scheme.blocks();
  const std::size_t m = blocks.size(), n = scheme.side();
  std::vector<std::size_t> stride(m, 1);
  for (std::size_t k = m; k-- > 1;) stride[k - 1] = stride[k] * blocks[k] * blocks[k];
  std::vector<std::size_t> row_off(n, 0), col_off(n, 0);
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t rest = t;
    for (std::size_t k = m; k-- > 0;) {
      const std::size_t digit = rest % blocks[k];
      rest /= blocks[k];
      row_off[t] += digit * blocks[k] * stride[k];
      col_off[t] += digit * stride[k];
    }
  }
  return {std::move(row_off), std::move(col_off)};
}

// Matricized-tensor times Khatri-Rao product for `mode`:
// out[i, r] = sum over all other indices of T * prod_{k != mode} A_k[i_k, r].
// Trailing modes are contracted first, then leading modes.
Tensor Mttkrp(const Tensor& t, const std::vector<Tensor>& factors,
              std::size_t mode, std::size_t rank) {
  const Shape& dims = t.shape();
  const std::size_t m = dims.size();
  std::size_t prefix = t.size();
  std::vector<double> x;

  if (mode + 1 < m) {
    const std::size_t last = dims[m - 1];
    prefix /= last;
    x.assign(prefix * rank, 0.0);
    const double* a = factors[m - 1].data().data();
    for (std::size_t p = 0; p < prefix; ++p) {
      const double* trow = t.data().data() + p * last;
      double* xrow = x.data() + p * rank;
      for (std::size_t k = 0; k < last; ++k) {
        const double v = trow[k];
        const double* arow = a + k * rank;
        for (std::size_t r = 0; r < rank; ++r) xrow[r] += v * arow[r];
      }
    }
    for (std::size_t md = m - 1; md-- > mode + 1;) {
      const std::size_t len = dims[md];
      const std::size_t next_prefix = prefix / len;
      std::vector<double> y(next_prefix * rank, 0.0);
      const double* a = factors[md].data().data();
      for (std::size_t p = 0; p < next_prefix; ++p) {
        double* yrow = y.data() + p * rank;
        for (std::size_t j = 0; j < len; ++j) {
          const double* xrow = x.data() + (p * len + j) * rank;
          const double* arow = a + j * rank;
          for (std::size_t r = 0; r < rank; ++r) yrow[r] += xrow[r] * arow[r];
        }
      }
      x = std::move(y);
      prefix = next_prefix;
    }
  } else {
    x.resize(prefix * rank);
    for (std::size_t p = 0; p < prefix; ++p) {
      std::fill_n(x.data() + p * rank, rank, t.data()[p]);
    }
  }

  // x: [I_0 .. I_mode, rank]; contract leading modes.
  for (std::size_t md = 0; md < mode; ++md) {
    const std::size_t len = dims[md];
    const std::size_t rest = prefix / len;
    std::vector<double> y(rest * rank, 0.0);
    const double* a = factors[md].data().data();
    for (std::size_t i = 0; i < len; ++i) {
      const double* arow = a + i * rank;
      for (std::size_t q = 0; q < rest; ++q) {
        const double* xrow = x.data() + (i * rest + q) * rank;
        double* yrow = y.data() + q * rank;
        for (std::size_t r = 0; r < rank; ++r) yrow[r] += xrow[r] * arow[r];
      }
    }
    x = std::move(y);
    prefix = rest;
  }
  return Tensor({dims[mode], rank}, std::move(x));
}

Tensor Gram(const Tensor& a) {
  const std::size_t rows = a.extent(0), rank = a.extent(1);
  Tensor g({rank, rank});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t r = 0; r < rank; ++r) {
      for (std::size_t s = 0; s < rank; ++s) {
        g.at({r, s}) += a.at({i, r}) * a.at({i, s});
      }
    }
  }
  return g;
}

double ExactRelativeError(const Tensor& t, const CpDecomposition& cp,
                          double t_norm) {
  if (t_norm == 0.0) return 0.0;
  const Tensor approx = CpReconstruct(cp, t.shape());
  double err = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = t[i] - approx[i];
    err += d * d;
  }
  return std::sqrt(err) / t_norm;
}

CpDecomposition RunAls(const Tensor& t, std::size_t rank,
                       std::vector<Tensor> factors, const CpOptions& options,
                       double t_norm) {
  const std::size_t m = t.rank();
  std::vector<Tensor> grams;
  grams.reserve(m);
  for (const auto& f : factors) grams.push_back(Gram(f));
  std::vector<double> weights(rank, 1.0);

  double prev_fit = -1.0;
  CpDecomposition out;
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    Tensor last_mttkrp;
    for (std::size_t mode = 0; mode < m; ++mode) {
      Tensor v({rank, rank}, 1.0);
      for (std::size_t k = 0; k < m; ++k) {
        if (k == mode) continue;
        for (std::size_t x = 0; x < v.size(); ++x) v[x] *= grams[k][x];
      }
      Tensor mt = Mttkrp(t, factors, mode, rank);
      Tensor updated = Matmul(mt, PseudoInverse(v));
      // Pull column norms into the weights.
      for (std::size_t r = 0; r < rank; ++r) {
        double nrm = 0.0;
        for (std::size_t i = 0; i < updated.extent(0); ++i) {
          nrm += updated.at({i, r}) * updated.at({i, r});
        }
        nrm = std::sqrt(nrm);
        weights[r] = nrm;
        if (nrm > 0.0) {
          for (std::size_t i = 0; i < updated.extent(0); ++i) {
            updated.at({i, r}) /= nrm;
          }
        }
      }
      factors[mode] = std::move(updated);
      grams[mode] = Gram(factors[mode]);
      if (mode + 1 == m) last_mttkrp = std::move(mt);
    }
    // ||T - T_hat||^2 = ||T||^2 - 2 <T, T_hat> + ||T_hat||^2.
    double inner = 0.0;
    const Tensor& a = factors[m - 1];
    for (std::size_t i = 0; i < a.extent(0); ++i) {
      for (std::size_t r = 0; r < rank; ++r) {
        inner += last_mttkrp.at({i, r}) * a.at({i, r}) * weights[r];
      }
    }
    double model = 0.0;
    for (std::size_t r = 0; r < rank; ++r) {
      for (std::size_t s = 0; s < rank; ++s) {
        double g = 1.0;
        for (std::size_t k = 0; k < m; ++k) g *= grams[k].at({r, s});
        model += weights[r] * weights[s] * g;
      }
    }
    const double resid2 = std::max(0.0, t_norm * t_norm - 2.0 * inner + model);
    const double fit = t_norm > 0.0 ? 1.0 - std::sqrt(resid2) / t_norm : 1.0;
    out.iterations = it + 1;
    if (std::abs(fit - prev_fit) < options.tol) {
      out.converged = true;
      break;
    }
    prev_fit = fit;
  }
  out.factors = std::move(factors);
  out.weights = std::move(weights);
  out.relative_error = ExactRelativeError(t, out, t_norm);
  out.fit = 1.0 - out.relative_error;
  return out;
}

void FillEnergyFields(SpectrumReport& rep, const SpectrumOptions& options) {
  rep.cum_energy.resize(rep.relative_error.size());
  for (std::size_t r = 0; r < rep.relative_error.size(); ++r) {
    const double e = rep.relative_error[r];
    rep.cum_energy[r] = std::clamp(1.0 - e * e, 0.0, 1.0);
  }
  for (double thr : options.energy_thresholds) {
    std::optional<std::size_t> rank;
    for (std::size_t r = 0; r < rep.cum_energy.size(); ++r) {
      if (rep.cum_energy[r] >= thr - 1e-12) {
        rank = r + 1;
        break;
      }
    }
    rep.rank_for_energy.emplace_back(thr, rank);
  }
  for (std::size_t r = 0; r < rep.relative_error.size(); ++r) {
    if (rep.relative_error[r] <= options.rank_tol) {
      rep.exact_rank = r + 1;
      break;
    }
  }
}

std::vector<double> Normalized(std::vector<double> sigma) {
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  const double total = std::accumulate(sigma.begin(), sigma.end(), 0.0);
  if (total > 0.0) {
    for (auto& s : sigma) s /= total;
  }
  return sigma;
}

SpectrumReport SvdReport(const Tensor& matrix, std::string space,
                         std::string scheme, std::size_t order,
                         const std::function<std::uint64_t(std::size_t)>& params,
                         const SpectrumOptions& options) {
  SpectrumReport rep;
  rep.space = std::move(space);
  rep.scheme = std::move(scheme);
  rep.order = order;
  const std::vector<double> sigma = SingularValues(matrix);
  double total2 = 0.0;
  for (double s : sigma) total2 += s * s;
  // Tail sums from the smallest value up avoid cancellation.
  std::vector<double> tail(sigma.size() + 1, 0.0);
  for (std::size_t j = sigma.size(); j-- > 0;) tail[j] = tail[j + 1] + sigma[j] * sigma[j];
  for (std::size_t r = 1; r <= sigma.size(); ++r) {
    rep.relative_error.push_back(total2 > 0.0 ? std::sqrt(tail[r] / total2) : 0.0);
    rep.params.push_back(params(r));
  }
  rep.singular_values = Normalized(sigma);
  FillEnergyFields(rep, options);
  if (options.max_rank && *options.max_rank < rep.relative_error.size()) {
    rep.relative_error.resize(*options.max_rank);
    rep.params.resize(*options.max_rank);
    rep.cum_energy.resize(*options.max_rank);
    rep.singular_values.resize(*options.max_rank);
  }
  return rep;
}

}  // namespace

KroneckerScheme::KroneckerScheme(std::vector<std::size_t> blocks)
    : blocks_(std::move(blocks)), side_(1) {
  if (blocks_.empty()) throw ShapeError("Kronecker scheme needs >= 1 block");
  for (std::size_t b : blocks_) {
    if (b == 0) throw ShapeError("Kronecker block sizes must be >= 1");
    side_ *= b;
  }
}

std::uint64_t KroneckerScheme::ParamsForRank(std::size_t rank) const {
  std::uint64_t per_term = 0;
  for (std::size_t b : blocks_) per_term += static_cast<std::uint64_t>(b) * b;
  return rank * per_term;
}

Shape KroneckerScheme::TensorShape() const {
  Shape s;
  for (std::size_t b : blocks_) s.push_back(b * b);
  return s;
}

std::string KroneckerScheme::ToString() const {
  std::string s;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(blocks_[i]);
  }
  return s;
}

Tensor KroneckerProduct(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("Kronecker product needs matrices");
  }
  const std::size_t p = a.extent(0), q = a.extent(1);
  const std::size_t r = b.extent(0), s = b.extent(1);
  Tensor out({p * r, q * s});
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      const double aij = a.at({i, j});
      for (std::size_t k = 0; k < r; ++k) {
        for (std::size_t l = 0; l < s; ++l) {
          out.at({i * r + k, j * s + l}) = aij * b.at({k, l});
        }
      }
    }
  }
  return out;
}

Tensor RearrangeForKronecker(const Tensor& a, const KroneckerScheme& scheme) {
  if (scheme.order() != 2) {
    throw ShapeError("matrix rearrangement needs a two-block scheme");
  }
  return RearrangeToTensor(a, scheme);
}

Tensor InverseRearrange(const Tensor& r, const KroneckerScheme& scheme) {
  if (scheme.order() != 2) {
    throw ShapeError("matrix rearrangement needs a two-block scheme");
  }
  return InverseRearrangeTensor(r, scheme);
}

Tensor RearrangeToTensor(const Tensor& a, const KroneckerScheme& scheme) {
  RequireSquare(a, scheme.side());
  const std::size_t n = scheme.side();
  const auto [row_off, col_off] = RearrangeOffsets(scheme);
  Tensor out(scheme.TensorShape());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      out[row_off[r] + col_off[c]] = a[r * n + c];
    }
  }
  return out;
}

Tensor InverseRearrangeTensor(const Tensor& t, const KroneckerScheme& scheme) {
  if (t.shape() != scheme.TensorShape()) {
    throw ShapeError("rearranged tensor shape " + ShapeToString(t.shape()) +
                     " does not match scheme " + scheme.ToString());
  }
  const std::size_t n = scheme.side();
  const auto [row_off, col_off] = RearrangeOffsets(scheme);
  Tensor out({n, n});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      out[r * n + c] = t[row_off[r] + col_off[c]];
    }
  }
  return out;
}

CpDecomposition CpAls(const Tensor& t, std::size_t rank,
                      const CpOptions& options,
                      const CpDecomposition* warm_start) {
  if (rank == 0) throw Error("CP rank must be >= 1");
  for (double x : t.data()) {
    if (!std::isfinite(x)) throw Error("CP input has non-finite entries");
  }
  const double t_norm = FrobeniusNorm(t);
  const std::size_t m = t.rank();

  auto random_factors = [&](Engine& eng) {
    std::vector<Tensor> f;
    for (std::size_t i = 0; i < m; ++i) f.push_back(RandomNormal({t.extent(i), rank}, eng));
    return f;
  };

  CpDecomposition best;
  bool have_best = false;
  auto consider = [&](CpDecomposition cand) {
    if (!have_best || cand.relative_error < best.relative_error) {
      best = std::move(cand);
      have_best = true;
    }
  };

  if (warm_start != nullptr && warm_start->factors.size() == m) {
    Engine eng = MakeEngine(options.seed, {0x5741524DULL, rank});
    std::vector<Tensor> f = random_factors(eng);
    const std::size_t keep = std::min(rank, warm_start->weights.size());
    for (std::size_t i = 0; i < m; ++i) {
      const Tensor& w = warm_start->factors[i];
      if (w.extent(0) != t.extent(i)) throw ShapeError("warm start shape mismatch");
      for (std::size_t r = 0; r < keep; ++r) {
        // Fold the weight into the first mode so the model is reproduced.
        const double scale = i == 0 ? warm_start->weights[r] : 1.0;
        for (std::size_t row = 0; row < t.extent(i); ++row) {
          f[i].at({row, r}) = w.at({row, r}) * scale;
        }
      }
    }
    consider(RunAls(t, rank, std::move(f), options, t_norm));
  }
  const std::size_t restarts = std::max<std::size_t>(options.restarts, 1);
  for (std::size_t s = 0; s < restarts; ++s) {
    Engine eng = MakeEngine(options.seed, {rank, s});
    consider(RunAls(t, rank, random_factors(eng), options, t_norm));
    if (best.relative_error == 0.0) break;
  }
  return best;
}

Tensor CpReconstruct(const CpDecomposition& cp, const Shape& shape) {
  const std::size_t m = shape.size();
  if (cp.factors.size() != m) throw ShapeError("CP factor count mismatch");
  const std::size_t rank = cp.weights.size();
  Tensor out(shape);
  std::vector<double> partial(out.size());
  for (std::size_t r = 0; r < rank; ++r) {
    // Build the rank-1 term as a running outer product.
    std::size_t len = 1;
    partial[0] = cp.weights[r];
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t n = shape[i];
      for (std::size_t p = len; p-- > 0;) {
        const double v = partial[p];
        for (std::size_t k = n; k-- > 0;) {
          partial[p * n + k] = v * cp.factors[i].at({k, r});
        }
      }
      len *= n;
    }
    for (std::size_t x = 0; x < out.size(); ++x) out[x] += partial[x];
  }
  return out;
}

std::vector<SpectrumReport> AnalyzeAttention(
    const Tensor& a, std::span<const KroneckerScheme> schemes,
    const SpectrumOptions& options) {
  if (a.rank() != 2 || a.extent(0) != a.extent(1)) {
    throw ShapeError("expected a square matrix, got " + ShapeToString(a.shape()));
  }
  const std::size_t n = a.extent(0);
  std::vector<SpectrumReport> reports;
  reports.push_back(SvdReport(
      a, "vector", std::to_string(n), 1,
      [n](std::size_t r) { return static_cast<std::uint64_t>(r) * n; }, options));

  for (const KroneckerScheme& scheme : schemes) {
    RequireSquare(a, scheme.side());
    if (scheme.order() < 2) {
      throw ShapeError("tensor-space analysis needs at least two blocks");
    }
    const std::string space = "tensor-" + std::to_string(scheme.order());
    auto params = [&scheme](std::size_t r) { return scheme.ParamsForRank(r); };
    if (scheme.order() == 2) {
      reports.push_back(SvdReport(RearrangeForKronecker(a, scheme), space,
                                  scheme.ToString(), 2, params, options));
      continue;
    }

    SpectrumReport rep;
    rep.space = space;
    rep.scheme = scheme.ToString();
    rep.order = scheme.order();
    const Tensor t = RearrangeToTensor(a, scheme);
    std::optional<CpDecomposition> prev;
    std::vector<double> last_weights;
    const std::size_t cp_ranks = options.max_rank.value_or(options.max_cp_rank);
    for (std::size_t r = 1; r <= cp_ranks; ++r) {
      CpOptions cp_opts = options.cp;
      cp_opts.seed = Mix64(options.cp.seed ^ std::hash<std::string>{}(rep.scheme));
      CpDecomposition cp = CpAls(t, r, cp_opts, prev ? &*prev : nullptr);
      double err = cp.relative_error;
      // A rank-r model can always reproduce the best rank-(r-1) one.
      if (!rep.relative_error.empty()) err = std::min(err, rep.relative_error.back());
      rep.relative_error.push_back(err);
      rep.params.push_back(params(r));
      if (cp.relative_error <= err) last_weights = cp.weights;
      for (auto& w : last_weights) w = std::abs(w);
      prev = std::move(cp);
      if (err <= options.rank_tol && !options.max_rank) break;
    }
    rep.singular_values = Normalized(last_weights);
    FillEnergyFields(rep, options);
    reports.push_back(std::move(rep));
  }
  return reports;
}

void WriteSpectrumCsv(std::ostream& os,
                      std::span<const SpectrumReport> reports) {
  os << "space,scheme,rank,sigma,cum_energy,params,rel_error\n";
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  for (const auto& rep : reports) {
    for (std::size_t r = 0; r < rep.max_rank(); ++r) {
      const double sigma =
          r < rep.singular_values.size() ? rep.singular_values[r] : 0.0;
      os << rep.space << ',' << rep.scheme << ',' << (r + 1) << ',' << sigma
         << ',' << rep.cum_energy[r] << ',' << rep.params[r] << ','
         << rep.relative_error[r] << '\n';
    }
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace tatt
