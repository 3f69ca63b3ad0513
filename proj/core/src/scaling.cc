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

#include "tatt/scaling.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "tatt/random.h"
#include "tatt/tensor_ops.h"

namespace tatt {

namespace {

template <typename Fn>
double MedianSeconds(std::size_t reps, Fn&& fn) {
  std::vector<double> times;
  times.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  return times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
}

}  // namespace

const char* VariantName(AttentionVariant variant) {
  return variant == AttentionVariant::kFull ? "full" : "tensorized";
}

std::vector<ScalingPoint> MeasureScaling(std::span<const std::size_t> lengths,
                                         const ScalingOptions& options) {
  if (options.reps < 3) throw Error("benchmark needs reps >= 3");
  std::vector<ScalingPoint> points;
  for (std::size_t n : lengths) {
    const std::vector<std::size_t> dims = BalancedDims(n, options.max_block);
    const TensorizationScheme scheme(dims, options.d);
    Engine eng = MakeEngine(options.seed, {0x42454E43ULL, n});
    const Tensor q = RandomNormal({n, options.d}, eng);
    const Tensor k = RandomNormal({n, options.d}, eng);
    const Tensor v = RandomNormal({n, options.d}, eng);

    if (options.full) {
      ScalingPoint p{AttentionVariant::kFull, n, {n}, options.d, options.reps};
      p.median_seconds = MedianSeconds(options.reps, [&] {
        volatile double sink = FullAttention(q, k, v)[0];
        (void)sink;
      });
      p.flops = FlopEstimate(TensorizationScheme({n}, options.d),
                             AttentionVariant::kFull).total();
      points.push_back(std::move(p));
    }
    if (options.tensorized) {
      const Tensor qt = Tensorize(q, scheme), kt = Tensorize(k, scheme),
                   vt = Tensorize(v, scheme);
      const DimMask masks = DimMask::None(scheme.order());
      AttentionOptions opts;
      opts.threads = options.threads;
      ScalingPoint p{AttentionVariant::kTensorized, n, dims, options.d,
                     options.reps};
      p.median_seconds = MedianSeconds(options.reps, [&] {
        volatile double sink =
            TensorizedAttentionForward(qt, kt, vt, scheme, masks, opts).output[0];
        (void)sink;
      });
      p.flops = FlopEstimate(scheme, AttentionVariant::kTensorized).total();
      points.push_back(std::move(p));
    }
  }
  return points;
}

std::optional<double> LogLogSlope(std::span<const ScalingPoint> points,
                                  AttentionVariant variant) {
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    if (p.variant != variant || p.median_seconds <= 0.0) continue;
    xs.push_back(std::log(static_cast<double>(p.n)));
    ys.push_back(std::log(p.median_seconds));
  }
  if (xs.size() < 2) return std::nullopt;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

void WriteScalingCsv(std::ostream& os, std::span<const ScalingPoint> points) {
  os << "variant,n,dims,d,reps,median_seconds,flop_estimate,slope\n";
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(9);
  for (const auto& p : points) {
    os << VariantName(p.variant) << ',' << p.n << ','
       << TensorizationScheme(p.dims, p.d).ToString() << ',' << p.d << ','
       << p.reps << ',' << p.median_seconds << ',' << p.flops << ",\n";
  }
  for (auto variant : {AttentionVariant::kFull, AttentionVariant::kTensorized}) {
    if (auto s = LogLogSlope(points, variant)) {
      os << VariantName(variant) << ",,,,,,," << *s << '\n';
    }
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace tatt
