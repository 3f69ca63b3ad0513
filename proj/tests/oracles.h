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

#ifndef TATT_TESTS_ORACLES_H_
#define TATT_TESTS_ORACLES_H_

// Straight-line reference implementations. They work on plain nested
// loops over coordinates and share no code with the library beyond the
// Tensor container.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "tatt/tensor.h"

namespace tatt::oracle {

inline std::vector<std::size_t> Coords(std::size_t t,
                                       const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> c(dims.size());
  for (std::size_t i = dims.size(); i-- > 0;) {
    c[i] = t % dims[i];
    t /= dims[i];
  }
  return c;
}

inline std::size_t Linear(const std::vector<std::size_t>& c,
                          const std::vector<std::size_t>& dims) {
  std::size_t t = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) t = t * dims[i] + c[i];
  return t;
}

// Rotates feature pairs (2j, 2j+1) of one row by angle pos * base^(-2j/d).
inline std::vector<double> Rotate(const double* x, std::size_t d, double pos,
                                  double base = 10000.0) {
  std::vector<double> out(x, x + d);
  for (std::size_t j = 0; j < d / 2; ++j) {
    const double theta =
        pos * std::pow(base, -2.0 * static_cast<double>(j) / static_cast<double>(d));
    const double c = std::cos(theta), s = std::sin(theta);
    out[2 * j] = x[2 * j] * c - x[2 * j + 1] * s;
    out[2 * j + 1] = x[2 * j] * s + x[2 * j + 1] * c;
  }
  return out;
}

// softmax(q k^T / sqrt(d), mask) v on [n, d]; mask[r * n + c] != 0 allows.
inline Tensor Attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        const std::vector<std::uint8_t>* mask = nullptr) {
  const std::size_t n = q.extent(0), d = q.extent(1);
  Tensor out({n, d});
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> s(n, -std::numeric_limits<double>::infinity());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (mask && !(*mask)[r * n + c]) continue;
      double acc = 0.0;
      for (std::size_t f = 0; f < d; ++f) acc += q.at({r, f}) * k.at({c, f});
      s[c] = acc / std::sqrt(static_cast<double>(d));
      mx = std::max(mx, s[c]);
    }
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      s[c] = std::isinf(s[c]) ? 0.0 : std::exp(s[c] - mx);
      z += s[c];
    }
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t f = 0; f < d; ++f) out.at({r, f}) += s[c] / z * v.at({c, f});
    }
  }
  return out;
}

// Analytic gradients of sum(dO * Attention(q, k, v)) without masks.
struct Grads {
  Tensor dq, dk, dv;
};
inline Grads AttentionGrads(const Tensor& q, const Tensor& k, const Tensor& v,
                            const Tensor& d_out) {
  const std::size_t n = q.extent(0), d = q.extent(1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor a({n, n});
  for (std::size_t r = 0; r < n; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      double acc = 0.0;
      for (std::size_t f = 0; f < d; ++f) acc += q.at({r, f}) * k.at({c, f});
      a.at({r, c}) = acc * scale;
      mx = std::max(mx, a.at({r, c}));
    }
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += (a.at({r, c}) = std::exp(a.at({r, c}) - mx));
    for (std::size_t c = 0; c < n; ++c) a.at({r, c}) /= z;
  }
  Grads g{Tensor({n, d}), Tensor({n, d}), Tensor({n, d})};
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> da(n, 0.0);
    double row = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t f = 0; f < d; ++f) {
        da[c] += d_out.at({r, f}) * v.at({c, f});
        g.dv.at({c, f}) += a.at({r, c}) * d_out.at({r, f});
      }
      row += da[c] * a.at({r, c});
    }
    for (std::size_t c = 0; c < n; ++c) {
      const double ds = a.at({r, c}) * (da[c] - row) * scale;
      for (std::size_t f = 0; f < d; ++f) {
        g.dq.at({r, f}) += ds * k.at({c, f});
        g.dk.at({c, f}) += ds * q.at({r, f});
      }
    }
  }
  return g;
}

// Per-dimension mask lookup: allowed(dim, batch, row, col).
using MaskFn = std::function<bool(std::size_t, std::size_t, std::size_t, std::size_t)>;

struct TensorizedConfig {
  std::vector<std::size_t> order;  // empty: ascending
  bool rope = false;
  double rope_base = 10000.0;
  MaskFn mask;  // empty: all allowed
};

// Sequential per-dimension attention on [n, d] sequence layout.
inline Tensor Tensorized(const Tensor& q, const Tensor& k, const Tensor& v,
                         const std::vector<std::size_t>& dims,
                         const TensorizedConfig& cfg = {}) {
  const std::size_t n = q.extent(0), d = q.extent(1), m = dims.size();
  std::vector<std::size_t> order = cfg.order;
  if (order.empty()) {
    order.resize(m);
    std::iota(order.begin(), order.end(), 0);
  }
  Tensor o = v;
  for (std::size_t i : order) {
    Tensor next({n, d});
    for (std::size_t t = 0; t < n; ++t) {
      const auto ct = Coords(t, dims);
      // Batch index: the other coordinates in row-major order.
      std::size_t b = 0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j != i) b = b * dims[j] + ct[j];
      }
      const std::vector<double> qt =
          cfg.rope ? Rotate(&q[t * d], d, static_cast<double>(ct[i]), cfg.rope_base)
                   : std::vector<double>(&q[t * d], &q[t * d] + d);
      std::vector<double> w(dims[i], 0.0);
      std::vector<bool> ok(dims[i], true);
      double mx = -std::numeric_limits<double>::infinity();
      bool any = false;
      for (std::size_t a = 0; a < dims[i]; ++a) {
        if (cfg.mask && !cfg.mask(i, b, ct[i], a)) {
          ok[a] = false;
          continue;
        }
        auto cs = ct;
        cs[i] = a;
        const std::size_t s = Linear(cs, dims);
        const std::vector<double> ks =
            cfg.rope ? Rotate(&k[s * d], d, static_cast<double>(a), cfg.rope_base)
                     : std::vector<double>(&k[s * d], &k[s * d] + d);
        double acc = 0.0;
        for (std::size_t f = 0; f < d; ++f) acc += qt[f] * ks[f];
        w[a] = acc / std::sqrt(static_cast<double>(d));
        mx = std::max(mx, w[a]);
        any = true;
      }
      if (!any) continue;
      double z = 0.0;
      for (std::size_t a = 0; a < dims[i]; ++a) {
        w[a] = ok[a] ? std::exp(w[a] - mx) : 0.0;
        z += w[a];
      }
      for (std::size_t a = 0; a < dims[i]; ++a) {
        auto cs = ct;
        cs[i] = a;
        const std::size_t s = Linear(cs, dims);
        for (std::size_t f = 0; f < d; ++f) next[t * d + f] += w[a] / z * o[s * d + f];
      }
    }
    o = std::move(next);
  }
  return o;
}

// Central differences of f at x, one coordinate at a time.
inline Tensor FiniteDifference(const std::function<double(const Tensor&)>& f,
                               const Tensor& x, double h = 1e-5) {
  Tensor g(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = probe[i];
    probe[i] = keep + h;
    const double up = f(probe);
    probe[i] = keep - h;
    const double down = f(probe);
    probe[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
inline double MaxRelativeError(const Tensor& a, const Tensor& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

inline double MaxAbs(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace tatt::oracle

#endif  // TATT_TESTS_ORACLES_H_
