// Copyright 2026 The LSG Attention Authors
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

#include "lsg/check.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "lsg/dense_oracle.h"
#include "lsg/rng.h"

namespace lsg {

namespace {

constexpr std::size_t kMaxFailures = 20;
constexpr uint32_t kGlobalTag = 1u << 31;

void record(PropertyResult& r, double error, const std::string& where) {
  r.max_error = std::max(r.max_error, error);
  ++r.cases;
  if (!(error <= r.tolerance) && r.failures.size() < kMaxFailures) {
    std::ostringstream os;
    os << where << " error=" << error;
    r.failures.push_back(os.str());
  }
}

std::string case_label(const LsgConfig& cfg, std::size_t n) {
  std::ostringstream os;
  os << "(n=" << n << ", bt=" << cfg.block_size << ", f=" << cfg.sparsity
     << ") g=" << cfg.globals << " strategy=" << strategy_name(cfg.strategy)
     << " causal=" << (cfg.causal ? 1 : 0)
     << " precision=" << precision_name(cfg.precision);
  return os.str();
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.at(i) - b.at(i)));
  }
  return m;
}

double equivalence_tolerance(Precision p) {
  return p == Precision::kSingle ? 1e-5 : 1e-10;
}

// Appends `extra` rows to x[n x D].
Tensor append_rows(const Tensor& x, const Tensor& extra) {
  std::vector<double> v = x.to_doubles();
  const std::vector<double> e = extra.to_doubles();
  v.insert(v.end(), e.begin(), e.end());
  return Tensor::from_values({x.dim(0) + extra.dim(0), x.dim(1)}, v,
                             x.precision());
}

Tensor first_rows(const Tensor& x, std::size_t rows) {
  std::vector<double> v = x.to_doubles();
  v.resize(rows * x.dim(1));
  return Tensor::from_values({rows, x.dim(1)}, v, x.precision());
}

PropertyResult named(const char* name, double tolerance) {
  PropertyResult r;
  r.name = name;
  r.tolerance = tolerance;
  return r;
}

using ProvenanceList = std::vector<std::vector<uint32_t>>;

}  // namespace

GridSpec GridSpec::full() {
  GridSpec g;
  g.strategies = {SparseStrategy::kNone,    SparseStrategy::kStrided,
                  SparseStrategy::kBlockStrided, SparseStrategy::kPooling,
                  SparseStrategy::kNorm,    SparseStrategy::kLsh};
  g.block_sizes = {4, 8, 16};
  g.sparsities = {0, 2, 4};
  g.globals = {0, 1, 4};
  g.causal = {false, true};
  g.lengths = {1, 3, 5, 16, 33, 64, 65};
  g.precisions = {Precision::kSingle, Precision::kDouble};
  return g;
}

GridSpec GridSpec::quick() {
  GridSpec g = full();
  g.block_sizes = {4, 8};
  g.sparsities = {0, 2};
  g.globals = {0, 1};
  g.lengths = {1, 5, 16, 33};
  return g;
}

GridSpec GridSpec::only(SparseStrategy strategy) const {
  GridSpec g = *this;
  g.strategies = {strategy};
  return g;
}

std::vector<LsgConfig> expand_grid(const GridSpec& grid) {
  std::vector<LsgConfig> out;
  for (SparseStrategy s : grid.strategies) {
    for (std::size_t bt : grid.block_sizes) {
      for (std::size_t f : grid.sparsities) {
        for (std::size_t g : grid.globals) {
          for (bool causal : grid.causal) {
            for (Precision p : grid.precisions) {
              LsgConfig cfg;
              cfg.block_size = bt;
              cfg.sparsity = f;
              cfg.globals = g;
              cfg.strategy = s;
              cfg.heads = grid.heads;
              cfg.head_dim = grid.head_dim;
              cfg.causal = causal;
              cfg.precision = p;
              cfg.seed = derive_seed(grid.seed, out.size());
              try {
                validate(cfg);
              } catch (const ConfigError&) {
                continue;
              }
              out.push_back(cfg);
            }
          }
        }
      }
    }
  }
  return out;
}

AttentionInputs random_inputs(const LsgConfig& cfg, std::size_t n,
                              uint64_t seed) {
  Rng rng(seed);
  const std::size_t D = cfg.model_dim(), g = cfg.globals;
  AttentionInputs in;
  in.q = rng_normal(rng, {n, D}, cfg.precision);
  in.k = rng_normal(rng, {n, D}, cfg.precision);
  in.v = rng_normal(rng, {n, D}, cfg.precision);
  in.global_q = rng_normal(rng, {g, D}, cfg.precision);
  in.global_k = rng_normal(rng, {g, D}, cfg.precision);
  in.global_v = rng_normal(rng, {g, D}, cfg.precision);
  return in;
}

std::string PropertyResult::summary() const {
  std::ostringstream os;
  os << (passed() ? "PASS " : "FAIL ") << name << " cases=" << cases
     << " max_error=" << max_error << " tolerance=" << tolerance;
  return os.str();
}

PropertyResult check_oracle_equivalence(const GridSpec& grid,
                                        const ExecOptions& opts) {
  PropertyResult r = named("oracle_equivalence", 1.0);  // errors are scaled per case
  for (const LsgConfig& cfg : expand_grid(grid)) {
    const LsgAttention attention(cfg);
    const double tol = equivalence_tolerance(cfg.precision);
    for (std::size_t n : grid.lengths) {
      const AttentionInputs in = random_inputs(cfg, n, derive_seed(cfg.seed, n));
      const AttentionOutput blocked = attention.forward(in, opts);
      const AttentionOutput dense =
          oracle_forward(build_augmented(attention, in), in);
      const double err = std::max(max_abs_diff(blocked.out, dense.out),
                                  max_abs_diff(blocked.global_out,
                                               dense.global_out));
      // Reported as a fraction of the precision's tolerance.
      record(r, err / tol, case_label(cfg, n));
    }
  }
  return r;
}

PropertyResult check_pattern_equality(const GridSpec& grid) {
  PropertyResult r = named("pattern_equality", 0.0);
  for (const LsgConfig& cfg : expand_grid(grid)) {
    if (cfg.precision != grid.precisions.front()) continue;
    const LsgAttention attention(cfg);
    const auto bt = static_cast<std::ptrdiff_t>(cfg.block_size);
    const auto f = static_cast<std::ptrdiff_t>(cfg.sparsity);
    for (std::size_t n : grid.lengths) {
      const AttentionInputs in = random_inputs(cfg, n, derive_seed(cfg.seed, n));
      const BlockedSequence kb = chunk(in.k, cfg);
      const BlockedSequence vb = chunk(in.v, cfg);
      SparseBlockSet sparse;
      if (cfg.has_sparse()) sparse = attention.build_sparse(kb, vb);
      const AugmentedAttention aug = build_augmented(attention, in);
      double mismatches = 0;
      for (std::size_t h = 0; h < cfg.heads; ++h) {
        for (std::size_t row = 0; row < n + cfg.globals; ++row) {
          ProvenanceList blocked, oracle;
          if (row < n) {
            const std::size_t i = row / cfg.block_size;
            std::vector<KeySlot> sp;
            if (cfg.has_sparse()) sp = gather_sparse(sparse.heads[h], i, cfg);
            const auto slots =
                assemble_block_keys(gather_local(kb, i, cfg), sp, cfg);
            std::vector<uint32_t> seen;
            for (const KeySlot& s : slots) {
              if (!slot_visible(s, row, cfg)) continue;
              if (s.source == KeySlot::Source::kLocal) {
                blocked.push_back({s.index});
              } else if (s.source == KeySlot::Source::kSparse) {
                blocked.push_back(sparse.heads[h].provenance[s.index]);
              } else {
                blocked.push_back({kGlobalTag | s.index});
                continue;
              }
              for (uint32_t pos : blocked.back()) {
                seen.push_back(pos);
                const auto p = static_cast<std::ptrdiff_t>(pos);
                const auto qi = static_cast<std::ptrdiff_t>(i);
                if (p < (qi - 1 - f) * bt || p >= (qi + 2 + f) * bt) {
                  mismatches += 1;  // outside the max-context window
                }
                if (cfg.causal && pos > row) mismatches += 1;
              }
            }
            std::sort(seen.begin(), seen.end());
            if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
              mismatches += 1;  // a position scored twice
            }
          } else {
            for (std::size_t j = 0; j < cfg.globals; ++j) {
              blocked.push_back({kGlobalTag | static_cast<uint32_t>(j)});
            }
            for (std::size_t p = 0; p < n; ++p) {
              if (kb.valid[p]) blocked.push_back({static_cast<uint32_t>(p)});
            }
          }
          for (std::size_t s = 0; s < aug.slots; ++s) {
            if (!aug.scored(h, row, s)) continue;
            if (s >= aug.global_begin()) {
              oracle.push_back(
                  {kGlobalTag | static_cast<uint32_t>(s - aug.global_begin())});
            } else {
              oracle.push_back(aug.provenance[h][s]);
            }
          }
          std::sort(blocked.begin(), blocked.end());
          std::sort(oracle.begin(), oracle.end());
          if (blocked != oracle) mismatches += 1;
        }
      }
      record(r, mismatches, case_label(cfg, n));
    }
  }
  return r;
}

PropertyResult check_row_stochastic(const GridSpec& grid) {
  PropertyResult r = named("row_stochastic", 1e-6);
  for (const LsgConfig& cfg : expand_grid(grid)) {
    const LsgAttention attention(cfg);
    for (std::size_t n : grid.lengths) {
      const AttentionInputs in = random_inputs(cfg, n, derive_seed(cfg.seed, n));
      const AttentionOutput out = attention.forward(in);
      double err = 0;
      for (double s : out.weights_checksum) err = std::max(err, std::abs(s - 1.0));
      record(r, err, case_label(cfg, n));
    }
  }
  return r;
}

PropertyResult check_causal_independence(const GridSpec& grid,
                                         std::size_t draws) {
  PropertyResult r = named("causal_independence", 1e-6);
  const std::size_t max_n =
      *std::max_element(grid.lengths.begin(), grid.lengths.end());
  for (const LsgConfig& cfg : expand_grid(grid)) {
    if (!cfg.causal) continue;
    const LsgAttention attention(cfg);
    Rng rng(derive_seed(cfg.seed, 0xCA5A1));
    for (std::size_t d = 0; d < draws; ++d) {
      const std::size_t n = 2 + rng.next_u64() % std::max<std::size_t>(max_n - 1, 1);
      const std::size_t j = 1 + rng.next_u64() % (n - 1);
      AttentionInputs in = random_inputs(cfg, n, rng.next_u64());
      const AttentionOutput base = attention.forward(in);
      const std::size_t D = cfg.model_dim();
      std::vector<double> q = in.q.to_doubles(), k = in.k.to_doubles(),
                          v = in.v.to_doubles();
      for (std::size_t c = 0; c < D; ++c) {
        q[j * D + c] += 1.0 + rng.uniform();
        k[j * D + c] -= 2.0 * rng.uniform();
        v[j * D + c] += 3.0;
      }
      in.q = Tensor::from_values({n, D}, q, cfg.precision);
      in.k = Tensor::from_values({n, D}, k, cfg.precision);
      in.v = Tensor::from_values({n, D}, v, cfg.precision);
      const AttentionOutput moved = attention.forward(in);
      const double err = max_abs_diff(first_rows(base.out, j),
                                      first_rows(moved.out, j));
      std::ostringstream where;
      where << case_label(cfg, n) << " j=" << j;
      record(r, err, where.str());
    }
  }
  return r;
}

PropertyResult check_padding_neutrality(const GridSpec& grid) {
  PropertyResult r = named("padding_neutrality", 0.0);
  for (const LsgConfig& cfg : expand_grid(grid)) {
    const LsgAttention attention(cfg);
    for (std::size_t n : grid.lengths) {
      const AttentionInputs in = random_inputs(cfg, n, derive_seed(cfg.seed, n));
      const std::size_t extra = 1 + (n * 7 + cfg.block_size) % (2 * cfg.block_size);
      AttentionInputs padded = in;
      Rng rng(derive_seed(cfg.seed, n + 1000));
      const std::size_t D = cfg.model_dim();
      padded.q = append_rows(in.q, rng_normal(rng, {extra, D}, cfg.precision));
      padded.k = append_rows(in.k, rng_normal(rng, {extra, D}, cfg.precision));
      padded.v = append_rows(in.v, rng_normal(rng, {extra, D}, cfg.precision));
      padded.key_mask.assign(n + extra, 0);
      std::fill_n(padded.key_mask.begin(), n, 1);
      const AttentionOutput a = attention.forward(in);
      const AttentionOutput b = attention.forward(padded);
      const bool same = first_rows(b.out, n) == a.out && b.global_out == a.global_out;
      record(r, same ? 0.0 : 1.0, case_label(cfg, n));
    }
  }
  return r;
}

PropertyResult check_schedule_equality(const GridSpec& grid,
                                       std::size_t threads) {
  PropertyResult r = named("schedule_equality", 0.0);
  for (const LsgConfig& cfg : expand_grid(grid)) {
    const LsgAttention attention(cfg);
    for (std::size_t n : grid.lengths) {
      const AttentionInputs in = random_inputs(cfg, n, derive_seed(cfg.seed, n));
      ExecOptions serial{1, true, {}};
      ExecOptions parallel{threads, true, {}};
      const AttentionOutput a = attention.forward(in, serial);
      const AttentionOutput b = attention.forward(in, parallel);
      Rng rng(derive_seed(cfg.seed, n + 77));
      const Tensor up = rng_normal(rng, a.out.shape(), cfg.precision);
      const Tensor gup = rng_normal(rng, a.global_out.shape(), cfg.precision);
      const Gradients ga = attention.backward(a, up, gup, 1);
      const Gradients gb = attention.backward(b, up, gup, threads);
      const bool same = a.out == b.out && a.global_out == b.global_out &&
                        ga.dq == gb.dq && ga.dk == gb.dk && ga.dv == gb.dv &&
                        ga.d_global_q == gb.d_global_q &&
                        ga.d_global_k == gb.d_global_k &&
                        ga.d_global_v == gb.d_global_v;
      record(r, same ? 0.0 : 1.0, case_label(cfg, n));
    }
  }
  return r;
}

PropertyResult check_gradients(const GradientCheckSpec& spec) {
  PropertyResult r = named("gradient_finite_difference", spec.rel_tolerance);
  std::vector<LsgConfig> configs;
  for (SparseStrategy s : spec.strategies) {
    for (bool causal : {false, true}) {
      if (causal && !spec.include_causal) continue;
      LsgConfig cfg;
      cfg.block_size = spec.block_size;
      cfg.sparsity = s == SparseStrategy::kNone ? 0 : spec.sparsity;
      cfg.strategy = s;
      cfg.globals = causal ? 0 : spec.globals;
      cfg.heads = spec.heads;
      cfg.head_dim = spec.head_dim;
      cfg.causal = causal;
      cfg.precision = Precision::kDouble;
      cfg.seed = derive_seed(spec.seed, configs.size());
      configs.push_back(cfg);
    }
  }
  for (const LsgConfig& cfg : configs) {
    const LsgAttention attention(cfg);
    AttentionInputs in = random_inputs(cfg, spec.n, derive_seed(cfg.seed, 1));
    Rng rng(derive_seed(cfg.seed, 2));
    const Tensor up = rng_normal(rng, {spec.n, cfg.model_dim()});
    const Tensor gup = rng_normal(rng, {cfg.globals, cfg.model_dim()});
    const AttentionOutput fwd = attention.forward(in, {1, true, {}});
    const Gradients grads = attention.backward(fwd, up, gup);

    auto loss = [&](const AttentionInputs& x) {
      const AttentionOutput o = attention.forward(x);
      double l = 0;
      auto od = o.out.data<double>();
      auto ud = up.data<double>();
      for (std::size_t i = 0; i < od.size(); ++i) l += od[i] * ud[i];
      auto gd = o.global_out.data<double>();
      auto gu = gup.data<double>();
      for (std::size_t i = 0; i < gd.size(); ++i) l += gd[i] * gu[i];
      return l;
    };
    struct Target {
      const char* name;
      Tensor AttentionInputs::*field;
      const Tensor* grad;
    };
    const Target targets[] = {
        {"dq", &AttentionInputs::q, &grads.dq},
        {"dk", &AttentionInputs::k, &grads.dk},
        {"dv", &AttentionInputs::v, &grads.dv},
        {"d_global_q", &AttentionInputs::global_q, &grads.d_global_q},
        {"d_global_k", &AttentionInputs::global_k, &grads.d_global_k},
        {"d_global_v", &AttentionInputs::global_v, &grads.d_global_v},
    };
    double worst = 0;
    std::string worst_where;
    bool failed = false;
    for (const Target& t : targets) {
      const Tensor original = in.*(t.field);
      const auto analytic = t.grad->data<double>();
      for (std::size_t e = 0; e < original.size(); ++e) {
        Tensor plus = original, minus = original;
        plus.data<double>()[e] += spec.step;
        minus.data<double>()[e] -= spec.step;
        in.*(t.field) = plus;
        const double lp = loss(in);
        in.*(t.field) = minus;
        const double lm = loss(in);
        in.*(t.field) = original;
        const double fd = (lp - lm) / (2 * spec.step);
        const double diff = std::abs(analytic[e] - fd);
        const bool ok = diff <= std::max(spec.abs_floor, spec.rel_tolerance * std::abs(fd));
        if (!ok) failed = true;
        // Relative error is reported where the relative bound governs.
        const bool relative = std::abs(fd) * spec.rel_tolerance > spec.abs_floor;
        const double scored = relative ? diff / std::abs(fd) : 0.0;
        if ((!ok && worst_where.empty()) || scored > worst) {
          worst = std::max(worst, scored);
          std::ostringstream os;
          os << t.name << "[" << e << "] analytic=" << analytic[e]
             << " fd=" << fd;
          worst_where = os.str();
        }
      }
    }
    r.max_error = std::max(r.max_error, worst);
    ++r.cases;
    if (failed && r.failures.size() < kMaxFailures) {
      r.failures.push_back(case_label(cfg, spec.n) + " worst " + worst_where);
    }
  }
  return r;
}

bool CheckReport::passed() const {
  return std::all_of(properties.begin(), properties.end(),
                     [](const PropertyResult& p) { return p.passed(); });
}

std::string CheckReport::text() const {
  std::ostringstream os;
  for (const PropertyResult& p : properties) {
    os << p.summary() << '\n';
    for (const std::string& f : p.failures) os << "  " << f << '\n';
  }
  os << (passed() ? "all properties passed" : "property failures detected")
     << '\n';
  return os.str();
}

CheckReport run_checks(const CheckOptions& opts) {
  GridSpec grid = opts.quick ? GridSpec::quick() : GridSpec::full();
  grid.seed = opts.seed;
  GradientCheckSpec grad;
  grad.seed = opts.seed;
  if (opts.strategy) {
    grid = grid.only(*opts.strategy);
    grad.strategies = {*opts.strategy};
  }
  CheckReport report;
  report.properties.push_back(check_oracle_equivalence(grid));
  report.properties.push_back(check_pattern_equality(grid));
  report.properties.push_back(check_row_stochastic(grid));
  report.properties.push_back(
      check_causal_independence(grid, opts.causal_draws));
  report.properties.push_back(check_padding_neutrality(grid));
  report.properties.push_back(check_schedule_equality(grid, opts.threads));
  report.properties.push_back(check_gradients(grad));
  return report;
}

}  // namespace lsg
