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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tatt/attention.h"
#include "tatt/errors.h"
#include "tatt/jl.h"
#include "tatt/linalg.h"
#include "tatt/position.h"
#include "tatt/random.h"
#include "tatt/scaling.h"
#include "tatt/spectrum.h"
#include "tatt/tatn_io.h"
#include "tatt/tensor.h"
#include "tatt/tensor_ops.h"
#include "tatt/toylm.h"
#include "tatt/version.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitRefused = 2;

struct GlobalFlags {
  std::uint64_t seed = 0;
  std::string out;
  std::string format;  // empty: per-command default
  std::size_t threads = 1;
  bool strict_mask = true;
};

class Output {
 public:
  explicit Output(const GlobalFlags& g) {
    if (!g.out.empty()) {
      file_ = std::make_unique<std::ofstream>(g.out);
      if (!*file_) throw tatt::FormatError("cannot open output file " + g.out);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

bool WantsCsv(const GlobalFlags& g, const char* fallback) {
  return (g.format.empty() ? std::string(fallback) : g.format) == "csv";
}

void CsvHeader(std::ostream& os, const GlobalFlags& g) {
  os << "# seed=" << g.seed << " version=" << tatt::kVersion << '\n';
}

tatt::MaskPolicy Policy(const GlobalFlags& g) {
  return g.strict_mask ? tatt::MaskPolicy::kStrict : tatt::MaskPolicy::kPermissive;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string dims = "4,4";
  std::size_t d = 4;
  double tol_exact = 1e-12;
  double tol_oracle = 1e-10;
  bool causal = false;
};

struct CheckRow {
  std::string name;
  double error;
  double tolerance;
  bool informational = false;  // reported, never gates the exit code
  bool pass() const { return informational || error <= tolerance; }
  const char* status() const {
    return informational ? "info" : (error <= tolerance ? "pass" : "fail");
  }
};

// Q and K whose per-stage score rows differ only by a batch-dependent
// constant: dimension i owns a contiguous block of features that depends
// on coordinate i alone. Every stage's weights are then the same across
// the batch, so the stage operators commute.
std::pair<tatt::Tensor, tatt::Tensor> SeparableQueryKey(
    const tatt::TensorizationScheme& scheme, tatt::Engine& eng) {
  const std::size_t m = scheme.order(), d = scheme.feature_dim();
  const std::size_t n = scheme.sequence_length();
  std::vector<tatt::Tensor> qf, kf;
  for (std::size_t i = 0; i < m; ++i) {
    qf.push_back(tatt::RandomNormal({scheme.dim(i), d}, eng));
    kf.push_back(tatt::RandomNormal({scheme.dim(i), d}, eng));
  }
  tatt::Tensor q(scheme.tensor_shape()), k(scheme.tensor_shape());
  for (std::size_t t = 0; t < n; ++t) {
    const auto coords = tatt::LinearToCoords(t, scheme.dims()).coords;
    for (std::size_t f = 0; f < d; ++f) {
      const std::size_t owner = f * m / d;
      q[t * d + f] = qf[owner].at({coords[owner], f});
      k[t * d + f] = kf[owner].at({coords[owner], f});
    }
  }
  return {std::move(q), std::move(k)};
}

int RunVerify(const GlobalFlags& g, const VerifyArgs& a) {
  const auto dims = tatt::ParseDims(a.dims);
  const tatt::TensorizationScheme scheme(dims, a.d);
  const std::size_t n = scheme.sequence_length();
  if (n > tatt::kCompositeMaxLength) {
    std::cerr << "refusing: sequence length " << n
              << " exceeds the composite-operator limit of "
              << tatt::kCompositeMaxLength << '\n';
    return kExitRefused;
  }
  const tatt::MaskPolicy policy = Policy(g);
  tatt::Engine eng = tatt::MakeEngine(g.seed, {0x56455249ULL});
  const tatt::Tensor q = tatt::RandomNormal(scheme.tensor_shape(), eng);
  const tatt::Tensor k = tatt::RandomNormal(scheme.tensor_shape(), eng);
  const tatt::Tensor v = tatt::RandomNormal(scheme.tensor_shape(), eng);
  const tatt::DimMask masks = a.causal ? tatt::DimMask::HierarchicalCausal(scheme)
                                       : tatt::DimMask::None(scheme.order());
  tatt::AttentionOptions opts;
  opts.policy = policy;
  opts.threads = g.threads;

  std::vector<CheckRow> rows;
  const tatt::Tensor out =
      tatt::TensorizedAttentionForward(q, k, v, scheme, masks, opts).output;

  {
    const tatt::TensorizationScheme flat({n}, a.d);
    const tatt::DimMask flat_masks = a.causal ? tatt::DimMask::HierarchicalCausal(flat)
                                              : tatt::DimMask::None(1);
    const tatt::Tensor qs = tatt::Sequentialize(q), ks = tatt::Sequentialize(k),
                       vs = tatt::Sequentialize(v);
    const tatt::Tensor t1 =
        tatt::TensorizedAttentionForward(qs, ks, vs, flat, flat_masks, opts).output;
    const tatt::Tensor ref = tatt::FullAttention(qs, ks, vs, flat_masks.ForDim(0), policy);
    rows.push_back({"single_dim_reduction", tatt::MaxAbsDiff(t1, ref), a.tol_exact});
  }
  {
    const tatt::Tensor c = tatt::CompositeOperator(q, k, scheme, masks, opts);
    const tatt::Tensor applied = tatt::Matmul(c, tatt::Sequentialize(v));
    rows.push_back({"composite_operator",
                    tatt::MaxAbsDiff(applied, tatt::Sequentialize(out)),
                    a.tol_oracle});
  }
  {
    const auto sep = SeparableQueryKey(scheme, eng);
    const tatt::Tensor sep_out =
        tatt::TensorizedAttentionForward(sep.first, sep.second, v, scheme, masks, opts)
            .output;
    double separable = 0.0, general = 0.0;
    std::vector<std::size_t> order(scheme.order());
    std::iota(order.begin(), order.end(), 0);
    std::size_t tried = 0;
    while (++tried < 720 && std::next_permutation(order.begin(), order.end())) {
      tatt::AttentionOptions o = opts;
      o.update_order = order;
      separable = std::max(
          separable, tatt::MaxAbsDiff(tatt::TensorizedAttentionForward(
                                          sep.first, sep.second, v, scheme, masks, o)
                                          .output,
                                      sep_out));
      general = std::max(
          general,
          tatt::MaxAbsDiff(
              tatt::TensorizedAttentionForward(q, k, v, scheme, masks, o).output, out));
    }
    rows.push_back({"update_order_separable", separable, a.tol_oracle});
    rows.push_back({"update_order_gap_general", general, a.tol_oracle, true});
  }
  {
    const tatt::Tensor constant(scheme.tensor_shape(), 0.75);
    const auto kept =
        tatt::TensorizedAttentionForward(q, k, constant, scheme, masks, opts).output;
    rows.push_back({"constant_value_preserved", tatt::MaxAbsDiff(kept, constant),
                    a.tol_exact});
  }

  Output sink(g);
  std::ostream& os = sink.stream();
  const bool ok = std::all_of(rows.begin(), rows.end(),
                              [](const CheckRow& r) { return r.pass(); });
  if (WantsCsv(g, "human")) {
    CsvHeader(os, g);
    os << "check,max_error,tolerance,status\n" << std::setprecision(6);
    for (const auto& r : rows) {
      os << r.name << ',' << r.error << ',' << r.tolerance << ','
         << r.status() << '\n';
    }
  } else {
    os << "verify " << scheme.ToString() << " d=" << a.d << " seed=" << g.seed
       << (a.causal ? " causal" : "") << '\n' << std::setprecision(3);
    for (const auto& r : rows) {
      os << "  " << std::left << std::setw(26) << r.name << std::right
         << " max_err=" << std::scientific << r.error << " tol=" << r.tolerance
         << std::defaultfloat << "  " << r.status() << '\n';
    }
    os << (ok ? "all checks passed" : "tolerance breached") << '\n';
  }
  return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::vector<std::size_t> lengths = {1024, 2048, 4096, 8192, 16384};
  std::size_t d = 16;
  std::size_t reps = 5;
  std::size_t max_block = 16;
  std::string variants = "both";
  bool check = false;
  double max_tensorized_slope = 1.3;
  double min_full_slope = 1.7;
};

int RunBench(const GlobalFlags& g, const BenchArgs& a) {
  if (a.reps < 3) {
    std::cerr << "refusing: --reps must be >= 3 (median of reps)\n";
    return kExitRefused;
  }
  tatt::ScalingOptions opts;
  opts.d = a.d;
  opts.reps = a.reps;
  opts.seed = g.seed;
  opts.max_block = a.max_block;
  opts.threads = g.threads;
  opts.full = a.variants != "tensorized";
  opts.tensorized = a.variants != "full";
  const auto points = tatt::MeasureScaling(a.lengths, opts);

  // Single-dimension lengths run the same computation in both variants.
  bool agree = true;
  for (std::size_t n : a.lengths) {
    if (!opts.full || !opts.tensorized || tatt::BalancedDims(n, a.max_block).size() != 1) {
      continue;
    }
    tatt::Engine eng = tatt::MakeEngine(g.seed, {0x42454E43ULL, n});
    const tatt::Tensor q = tatt::RandomNormal({n, a.d}, eng);
    const tatt::Tensor k = tatt::RandomNormal({n, a.d}, eng);
    const tatt::Tensor v = tatt::RandomNormal({n, a.d}, eng);
    const auto t = tatt::TensorizedAttentionForward(
        q, k, v, tatt::TensorizationScheme({n}, a.d), tatt::DimMask::None(1));
    if (tatt::MaxAbsDiff(t.output, tatt::FullAttention(q, k, v)) > 1e-12) agree = false;
  }

  Output sink(g);
  std::ostream& os = sink.stream();
  const auto full_slope = tatt::LogLogSlope(points, tatt::AttentionVariant::kFull);
  const auto tens_slope = tatt::LogLogSlope(points, tatt::AttentionVariant::kTensorized);
  if (WantsCsv(g, "csv")) {
    CsvHeader(os, g);
    tatt::WriteScalingCsv(os, points);
  } else {
    os << std::left << std::setw(12) << "variant" << std::setw(8) << "n"
       << std::setw(14) << "dims" << std::setw(14) << "median_s"
       << "flops\n";
    for (const auto& p : points) {
      os << std::setw(12) << tatt::VariantName(p.variant) << std::setw(8) << p.n
         << std::setw(14) << tatt::TensorizationScheme(p.dims, p.d).ToString()
         << std::setw(14) << p.median_seconds << p.flops << '\n';
    }
    os << std::right;
    if (full_slope) os << "slope full " << *full_slope << '\n';
    if (tens_slope) os << "slope tensorized " << *tens_slope << '\n';
  }
  if (!agree) {
    std::cerr << "single-dimension variants disagree\n";
    return kExitFailure;
  }
  if (a.check) {
    const bool ok = (!tens_slope || *tens_slope <= a.max_tensorized_slope) &&
                    (!full_slope || *full_slope >= a.min_full_slope);
    if (!ok) {
      std::cerr << "slope outside band\n";
      return kExitFailure;
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- spectrum

struct SpectrumArgs {
  std::string input;
  std::string demo;
  std::size_t n = 64;
  std::vector<std::string> schemes;
  std::optional<std::size_t> rank;
  std::size_t planted = 1;
};

std::vector<std::size_t> DefaultTwoFactor(std::size_t n) {
  std::size_t best = 1;
  for (std::size_t a = 2; a * a <= n; ++a) {
    if (n % a == 0) best = a;
  }
  if (best == 1) return {};
  return {n / best, best};
}

tatt::Tensor DemoMatrix(const SpectrumArgs& a, std::uint64_t seed,
                        const std::vector<tatt::KroneckerScheme>& schemes) {
  if (a.demo == "identity") {
    tatt::Tensor eye({a.n, a.n});
    for (std::size_t i = 0; i < a.n; ++i) eye.at({i, i}) = 1.0;
    return eye;
  }
  if (a.demo == "random") return tatt::SyntheticAttention(a.n, seed);
  if (a.demo == "kron") {
    if (schemes.empty()) {
      throw tatt::ShapeError("kron demo needs a scheme that factors --n");
    }
    tatt::Engine eng = tatt::MakeEngine(seed, {0x4B524F4EULL});
    const auto& blocks = schemes.front().blocks();
    tatt::Tensor sum({a.n, a.n});
    for (std::size_t j = 0; j < a.planted; ++j) {
      tatt::Tensor term({1, 1}, 1.0);
      for (std::size_t b : blocks) {
        term = tatt::KroneckerProduct(
            term, tatt::SoftmaxLastAxis(tatt::RandomNormal({b, b}, eng)));
      }
      for (std::size_t x = 0; x < sum.size(); ++x) {
        sum[x] += term[x] / static_cast<double>(a.planted);
      }
    }
    return sum;
  }
  throw tatt::Error("unknown demo '" + a.demo + "' (identity|kron|random)");
}

int RunSpectrum(const GlobalFlags& g, SpectrumArgs a) {
  if (a.input.empty() && a.demo.empty()) a.demo = "random";
  if (!a.input.empty() && !a.demo.empty()) {
    std::cerr << "refusing: give either --input or --demo, not both\n";
    return kExitRefused;
  }
  if (a.planted == 0) throw tatt::Error("--planted must be >= 1");
  tatt::Tensor matrix;
  if (!a.input.empty()) {
    matrix = tatt::LoadSquareMatrix(a.input);
    a.n = matrix.extent(0);
  }
  std::vector<tatt::KroneckerScheme> schemes;
  for (const auto& s : a.schemes) schemes.emplace_back(tatt::ParseDims(s));
  if (schemes.empty()) {
    if (auto dims = DefaultTwoFactor(a.n); !dims.empty()) schemes.emplace_back(dims);
  }
  for (const auto& s : schemes) {
    if (s.side() != a.n) {
      throw tatt::ShapeError("scheme " + s.ToString() + " does not factor n = " +
                             std::to_string(a.n));
    }
  }
  if (a.input.empty()) matrix = DemoMatrix(a, g.seed, schemes);

  tatt::SpectrumOptions opts;
  opts.cp.seed = g.seed;
  opts.max_rank = a.rank;
  const auto reports = tatt::AnalyzeAttention(matrix, schemes, opts);

  Output sink(g);
  std::ostream& os = sink.stream();
  if (WantsCsv(g, "csv")) {
    CsvHeader(os, g);
    tatt::WriteSpectrumCsv(os, reports);
  } else {
    for (const auto& r : reports) {
      os << r.space << ' ' << r.scheme << ": rank ";
      if (r.exact_rank) {
        os << *r.exact_rank;
      } else {
        os << "> " << r.max_rank();
      }
      for (const auto& [thr, rank] : r.rank_for_energy) {
        os << ", " << thr * 100 << "% energy at ";
        if (rank) {
          os << "rank " << *rank << " (" << r.params[*rank - 1] << " params)";
        } else {
          os << "n/a";
        }
      }
      os << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- jl

struct JlArgs {
  std::size_t n = 256;
  std::string dims;
  std::size_t m = 2;
  std::size_t r = 1;
  double epsilon = 0.5;
  std::size_t trials = 2000;
  std::vector<std::size_t> ks;
  std::size_t k_min = 1;
  std::size_t k_max = 0;
  double target = 0.9;
  bool full_sweep = false;
  bool orthonormal = false;
  std::string input;
};

std::vector<std::size_t> EvenDims(std::size_t n, std::size_t m) {
  const auto root = static_cast<std::size_t>(
      std::llround(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(m))));
  std::size_t prod = 1;
  for (std::size_t i = 0; i < m; ++i) prod *= root;
  if (prod != n) {
    throw tatt::ShapeError("n = " + std::to_string(n) + " is not a perfect " +
                           std::to_string(m) + "-th power; pass --dims");
  }
  return std::vector<std::size_t>(m, root);
}

int RunJl(const GlobalFlags& g, const JlArgs& a) {
  tatt::Tensor matrix;
  std::size_t n = a.n;
  if (!a.input.empty()) {
    matrix = tatt::LoadSquareMatrix(a.input);
    n = matrix.extent(0);
  }
  const auto dims = a.dims.empty() ? EvenDims(n, a.m) : tatt::ParseDims(a.dims);
  if (tatt::ShapeProduct(dims) != n) {
    throw tatt::ShapeError("dims do not multiply to n = " + std::to_string(n));
  }
  if (a.input.empty()) matrix = tatt::SyntheticAttention(n, g.seed);
  std::vector<std::size_t> ks = a.ks;
  if (ks.empty()) ks = tatt::DoublingGrid(a.k_min, a.k_max ? a.k_max : 64 * n);
  if (ks.empty()) {
    std::cerr << "refusing: empty k sweep\n";
    return kExitRefused;
  }
  tatt::RecoveryOptions opts;
  opts.orthonormal = a.orthonormal;
  opts.threads = g.threads;
  const auto sweep = tatt::SweepK(matrix, dims, a.r, ks, a.epsilon, a.trials,
                                  g.seed, a.target, a.full_sweep, opts);

  Output sink(g);
  std::ostream& os = sink.stream();
  if (WantsCsv(g, "csv")) {
    CsvHeader(os, g);
    tatt::WriteJlCsv(os, sweep.points);
  } else {
    for (const auto& p : sweep.points) {
      os << "k=" << p.k << " success=" << p.success_rate << " +/- "
         << p.StdError() << " distortion=" << p.mean_distortion << '\n';
    }
    if (sweep.min_k) {
      os << "minimal k for " << a.target * 100 << "% success: " << *sweep.min_k << '\n';
    } else {
      os << "target success not reached\n";
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string dims = "4,4,4";
  std::size_t d = 32;
  std::size_t vocab = 16;
  std::size_t steps = 2000;
  double lr = 0.5;
  std::size_t batch = 8;
  std::size_t eval = 512;
  bool no_rope = false;
  double chance_multiple = 5.0;
};

int RunTrain(const GlobalFlags& g, const TrainArgs& a) {
  const tatt::TensorizationScheme scheme(tatt::ParseDims(a.dims), a.d);
  tatt::ToyModel model = tatt::ToyModel::Init(a.vocab, scheme, !a.no_rope, g.seed);
  const tatt::RecallTask task(scheme.sequence_length(), a.vocab);
  tatt::TrainOptions opts;
  opts.steps = a.steps;
  opts.lr = a.lr;
  opts.seed = g.seed;
  opts.batch_size = a.batch;
  opts.eval_samples = a.eval;
  const tatt::TrainTrace trace = tatt::Train(model, task, opts);
  const double threshold = a.chance_multiple * task.chance();

  Output sink(g);
  std::ostream& os = sink.stream();
  if (WantsCsv(g, "csv")) {
    CsvHeader(os, g);
    tatt::WriteTraceCsv(os, trace);
  } else {
    const std::size_t stride = std::max<std::size_t>(1, trace.loss.size() / 20);
    for (std::size_t s = 0; s < trace.loss.size(); s += stride) {
      os << "step " << s << " loss " << trace.loss[s] << '\n';
    }
  }
  if (trace.diverged) {
    os << "# diverged at step " << trace.loss.size() - 1 << '\n';
    return kExitFailure;
  }
  os << "# final_accuracy=" << trace.final_accuracy << " threshold=" << threshold
     << " chance=" << task.chance() << '\n';
  return trace.final_accuracy > threshold ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- extrapolate

struct ExtrapolateArgs {
  std::string scheme = "32,32,32";
  std::size_t dim = 0;
  std::size_t p = 1;
  std::size_t rounds = 0;
};

int RunExtrapolate(const GlobalFlags& g, const ExtrapolateArgs& a) {
  const auto dims = tatt::ParseDims(a.scheme);
  if (a.dim >= dims.size()) {
    std::cerr << "refusing: --dim " << a.dim << " out of range for "
              << dims.size() << " dimensions\n";
    return kExitRefused;
  }
  const std::size_t base = tatt::ShapeProduct(dims);
  const std::size_t grown = tatt::EffectiveLength(dims, a.dim, a.p);
  Output sink(g);
  std::ostream& os = sink.stream();
  std::vector<tatt::GrowthStep> steps;
  if (a.rounds > 0) {
    steps = tatt::SimulateGrowth(dims, tatt::ExtrapolationPolicy::LowerToHigher(dims.size()),
                                 a.rounds);
  }
  if (WantsCsv(g, "human")) {
    CsvHeader(os, g);
    os << "scheme,dim,p,base,extended,increment\n";
    os << tatt::ShapeToString(dims) << ',' << a.dim << ',' << a.p << ',' << base
       << ',' << grown << ',' << grown - base << '\n';
    for (const auto& s : steps) {
      os << tatt::ShapeToString(s.dims) << ',' << s.dim << ",1,,"
         << s.capacity << ",\n";
    }
  } else {
    os << base << " → " << grown << " (+" << grown - base << ")\n";
    for (const auto& s : steps) {
      os << "grow dim " << s.dim << " -> " << tatt::ShapeToString(s.dims)
         << " capacity " << s.capacity << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensorized attention toolkit"};
  app.set_version_flag("--version", std::string(tatt::kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out", g.out, "Write output to this path instead of stdout");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"csv", "human"}));
  app.add_option("--threads", g.threads, "Worker threads where supported")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--strict-mask", g.strict_mask,
                 "Reject fully masked rows instead of zeroing them")
      ->capture_default_str();

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Check tensorized attention against oracles");
  verify->add_option("--dims", va.dims, "Tensorization extents, e.g. 4,4")
      ->capture_default_str();
  verify->add_option("--d", va.d, "Feature dimension")->capture_default_str();
  verify->add_option("--tol-exact", va.tol_exact,
                     "Tolerance for reductions and constant preservation")
      ->capture_default_str();
  verify->add_option("--tol-oracle", va.tol_oracle,
                     "Tolerance for composite-operator and order checks")
      ->capture_default_str();
  verify->add_flag("--causal", va.causal, "Use hierarchical-causal masks");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Time full vs tensorized forward passes");
  bench->add_option("--lengths", ba.lengths, "Sequence lengths")->delimiter(',');
  bench->add_option("--d", ba.d, "Feature dimension")->capture_default_str();
  bench->add_option("--reps", ba.reps, "Repetitions per point (median reported)")
      ->capture_default_str();
  bench->add_option("--max-block", ba.max_block, "Largest extent of balanced dims")
      ->capture_default_str();
  bench->add_option("--variants", ba.variants, "full, tensorized or both")
      ->check(CLI::IsMember({"full", "tensorized", "both"}))
      ->capture_default_str();
  bench->add_flag("--check", ba.check, "Exit 1 when a slope leaves its band");
  bench->add_option("--max-tensorized-slope", ba.max_tensorized_slope)
      ->capture_default_str();
  bench->add_option("--min-full-slope", ba.min_full_slope)->capture_default_str();

  SpectrumArgs sa;
  std::size_t spectrum_rank = 0;
  auto* spectrum = app.add_subcommand("spectrum", "Vector vs tensor-space spectra");
  spectrum->add_option("--input", sa.input, "TATN or CSV square matrix");
  spectrum->add_option("--demo", sa.demo, "Synthesize identity, kron or random")
      ->check(CLI::IsMember({"identity", "kron", "random"}));
  spectrum->add_option("--n", sa.n, "Demo matrix side")->capture_default_str();
  spectrum->add_option("--scheme", sa.schemes, "Block sizes, repeatable (e.g. 8,8,8)");
  auto* rank_opt = spectrum->add_option("--rank", spectrum_rank,
                                        "Report ranks 1..R in every space");
  spectrum->add_option("--planted", sa.planted, "Kronecker rank of the kron demo")
      ->capture_default_str();

  JlArgs ja;
  auto* jl = app.add_subcommand("jl", "Low-rank recovery with tensorized projections");
  jl->add_option("--n", ja.n, "Matrix side")->capture_default_str();
  jl->add_option("--m", ja.m, "Tensor order (even split of n)")->capture_default_str();
  jl->add_option("--dims", ja.dims, "Explicit extents instead of --m");
  jl->add_option("--r", ja.r, "Row tensor rank")->capture_default_str();
  jl->add_option("--epsilon", ja.epsilon)->capture_default_str();
  jl->add_option("--trials", ja.trials)->capture_default_str();
  jl->add_option("--ks", ja.ks, "Explicit k values")->delimiter(',');
  jl->add_option("--k-min", ja.k_min, "Doubling sweep start")->capture_default_str();
  jl->add_option("--k-max", ja.k_max, "Doubling sweep end (default 64 n)");
  jl->add_option("--target", ja.target, "Success rate defining minimal k")
      ->capture_default_str();
  jl->add_flag("--full-sweep", ja.full_sweep, "Keep sweeping past the target");
  jl->add_flag("--orthonormal", ja.orthonormal, "Debug isometry projections");
  jl->add_option("--input", ja.input, "TATN or CSV matrix instead of a synthetic one");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train the toy recall model");
  train->add_option("--dims", ta.dims, "Tensorization extents")->capture_default_str();
  train->add_option("--d", ta.d, "Feature dimension")->capture_default_str();
  train->add_option("--vocab", ta.vocab)->capture_default_str();
  train->add_option("--steps", ta.steps)->capture_default_str();
  train->add_option("--lr", ta.lr)->capture_default_str();
  train->add_option("--batch", ta.batch)->capture_default_str();
  train->add_option("--eval", ta.eval, "Held-out samples for final accuracy")
      ->capture_default_str();
  train->add_flag("--no-rope", ta.no_rope, "Disable per-dimension RoPE");
  train->add_option("--chance-multiple", ta.chance_multiple,
                    "Required accuracy as a multiple of chance")
      ->capture_default_str();

  ExtrapolateArgs ea;
  auto* extrapolate = app.add_subcommand("extrapolate", "Effective context length arithmetic");
  extrapolate->add_option("--scheme", ea.scheme)->capture_default_str();
  extrapolate->add_option("--dim", ea.dim)->capture_default_str();
  extrapolate->add_option("--p", ea.p, "Extra positions on --dim")->capture_default_str();
  extrapolate->add_option("--rounds", ea.rounds,
                          "Also simulate this many last-to-first growth steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitRefused;
  }

  try {
    if (*verify) return RunVerify(g, va);
    if (*bench) return RunBench(g, ba);
    if (*spectrum) {
      if (*rank_opt) {
        if (spectrum_rank == 0) throw tatt::Error("--rank must be >= 1");
        sa.rank = spectrum_rank;
      }
      return RunSpectrum(g, sa);
    }
    if (*jl) return RunJl(g, ja);
    if (*train) return RunTrain(g, ta);
    if (*extrapolate) return RunExtrapolate(g, ea);
  } catch (const tatt::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const tatt::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const tatt::Error& e) {
    std::cerr << "refusing: " << e.what() << '\n';
    return kExitRefused;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitRefused;
}
