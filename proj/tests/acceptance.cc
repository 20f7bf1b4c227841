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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "lsg/bench.h"
#include "lsg/check.h"
#include "lsg/convert.h"
#include "lsg/dense_oracle.h"
#include "lsg/rng.h"
#include "lsg/weight_bundle.h"

namespace lsg {
namespace {

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail,
            double seconds) {
  std::printf("%s [%d] %s: %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, title,
              detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0,
                double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

void oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (Precision p : {Precision::kSingle, Precision::kDouble}) {
    GridSpec grid = GridSpec::full();
    grid.precisions = {p};
    const PropertyResult r = check_oracle_equivalence(grid);
    const double tol = p == Precision::kSingle ? 1e-5 : 1e-10;
    ok = ok && r.passed();
    detail += std::string(precision_name(p)) + " cases=" +
              std::to_string(r.cases) + fmt(" max_abs=%.3g tol=%.0e; ",
                                            r.max_error * tol, tol);
    for (const std::string& f : r.failures) detail += f + "; ";
  }
  const double secs = since(t0);
  report(1, "oracle equivalence", ok && secs < 300, detail + "limit 300s", secs);
}

void structural_counts() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t checked = 0, bad_width = 0, bad_span = 0, pooled_exact = 0;
  for (const LsgConfig& cfg : expand_grid(GridSpec::full())) {
    if (cfg.causal || !cfg.has_sparse() || cfg.precision != Precision::kDouble) {
      continue;
    }
    const LsgAttention attn(cfg);
    const std::size_t f = cfg.sparsity, bt = cfg.block_size;
    const std::size_t n = (2 * f + 5) * bt;
    const AttentionInputs in = random_inputs(cfg, n, cfg.seed);
    const BlockedSequence kb = chunk(in.k, cfg), vb = chunk(in.v, cfg);
    const SparseBlockSet sp = attn.build_sparse(kb, vb);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      for (std::size_t i = 0; i < kb.blocks; ++i) {
        const auto local = gather_local(kb, i, cfg);
        const auto sparse = gather_sparse(sp.heads[h], i, cfg);
        const auto row = assemble_block_keys(local, sparse, cfg);
        if (row.size() != 5 * bt + cfg.globals ||
            key_layout(cfg).width() != 5 * bt + cfg.globals) {
          ++bad_width;
        }
        if (i < f + 1 || i + f + 1 >= kb.blocks) continue;  // interior only
        std::set<uint32_t> pos;
        for (const KeySlot& k : local) pos.insert(k.index);
        for (const KeySlot& k : sparse) {
          if (k.masked()) continue;
          for (uint32_t p : sp.heads[h].provenance[k.index]) pos.insert(p);
        }
        const std::size_t span = *pos.rbegin() - *pos.begin() + 1;
        if (span > max_context(cfg)) ++bad_span;
        if (cfg.strategy == SparseStrategy::kPooling) {
          if (span != max_context(cfg) || pos.size() != span) ++bad_span;
          ++pooled_exact;
        }
        ++checked;
      }
    }
  }
  LsgConfig fig;
  fig.block_size = 2;
  fig.sparsity = 4;
  fig.strategy = SparseStrategy::kPooling;
  const KeyLayout k = key_layout(fig);
  const bool fig_ok = k.local_keys == 6 && k.sparse_keys == 4 &&
                      max_context(fig) == 22;
  const bool ok = bad_width == 0 && bad_span == 0 && checked > 0 &&
                  pooled_exact > 0 && fig_ok;
  report(2, "structural counts", ok,
         "interior blocks=" + std::to_string(checked) +
             " width violations=" + std::to_string(bad_width) +
             " span violations=" + std::to_string(bad_span) +
             " (bt=2,f=4): local=" + std::to_string(k.local_keys) +
             " sparse=" + std::to_string(k.sparse_keys),
         since(t0));
}

void gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const PropertyResult r = check_gradients(GradientCheckSpec{});
  const double secs = since(t0);
  std::string detail = "configs=" + std::to_string(r.cases) +
                       fmt(" max_rel=%.3g tol=1e-4 floor=1e-8", r.max_error) +
                       "; limit 60s";
  for (const std::string& f : r.failures) detail += "; " + f;
  report(3, "gradient finite differences", r.passed() && secs < 60, detail,
         secs);
}

void causal_independence() {
  const auto t0 = std::chrono::steady_clock::now();
  GridSpec grid = GridSpec::full();
  grid.precisions = {Precision::kSingle};
  const PropertyResult r = check_causal_independence(grid, 20);
  std::string detail = "draws=" + std::to_string(r.cases) +
                       fmt(" max_change=%.3g tol=1e-6", r.max_error);
  for (const std::string& f : r.failures) detail += "; " + f;
  report(4, "causal independence", r.passed() && r.cases > 0, detail,
         since(t0));
}

void complexity_scaling() {
  const auto t0 = std::chrono::steady_clock::now();
  LsgConfig cfg;
  cfg.block_size = 128;
  cfg.sparsity = 2;
  cfg.globals = 1;
  cfg.strategy = SparseStrategy::kNorm;
  cfg.heads = 4;
  cfg.head_dim = 32;
  cfg.precision = Precision::kSingle;
  bool counter_ok = true;
  for (std::size_t n = 1024; n <= 65536; n *= 2) {
    const uint64_t a = score_entry_count(cfg, n) - cfg.globals * (n + cfg.globals);
    const uint64_t b =
        score_entry_count(cfg, 2 * n) - cfg.globals * (2 * n + cfg.globals);
    counter_ok = counter_ok && b == 2 * a;
  }
  BenchOptions opts;
  opts.repeats = 3;
  std::vector<double> lsg, full;
  for (std::size_t n : {4096, 8192, 16384}) {
    lsg.push_back(double(bench_one(AttentionKind::kLsg, cfg, n, opts).time_ns));
    full.push_back(double(bench_one(AttentionKind::kFull, cfg, n, opts).time_ns));
  }
  const double lsg_max = std::max(lsg[1] / lsg[0], lsg[2] / lsg[1]);
  const double full_min = std::min(full[1] / full[0], full[2] / full[1]);
  const double secs = since(t0);
  const bool ok = counter_ok && lsg_max <= 2.6 && full_min >= 3.0 && secs < 600;
  report(5, "complexity scaling", ok,
         std::string("counter doubling ") + (counter_ok ? "exact" : "BROKEN") +
             fmt("; lsg ratios %.2f %.2f (<= 2.6); full ratios %.2f %.2f (>= 3.0)",
                 lsg[1] / lsg[0], lsg[2] / lsg[1], full[1] / full[0],
                 full[2] / full[1]) +
             "; limit 600s",
         secs);
}

void conversion() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t bad = 0, cases = 0;
  for (std::size_t L = 1; L <= 8; ++L) {
    Rng rng(L);
    const Tensor P = rng_normal(rng, {L, 5});
    const std::vector<double> pv = P.to_doubles();
    for (std::size_t target = L; target <= 4 * L; ++target) {
      const std::vector<double> out = extend_positional(P, target).to_doubles();
      for (std::size_t i = 0; i < target; ++i) {
        for (std::size_t c = 0; c < 5; ++c) {
          bad += out[i * 5 + c] != pv[(i % L) * 5 + c];
        }
      }
      ++cases;
    }
    for (std::size_t g = 1; g <= L; ++g) {
      const Tensor cls = rng_normal(rng, {5}), mask = rng_normal(rng, {5});
      const std::vector<double> gl = init_globals(cls, mask, P, g).to_doubles();
      const std::vector<double> cv = cls.to_doubles(), mv = mask.to_doubles();
      for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t c = 0; c < 5; ++c) {
          bad += gl[i * 5 + c] != (i == 0 ? cv[c] : mv[c]) + pv[i * 5 + c];
        }
      }
      ++cases;
    }
  }
  const WeightBundle toy = make_toy_bundle({});
  const std::string bytes = serialize_bundle(toy);
  const bool round_trip = serialize_bundle(parse_bundle(bytes)) == bytes;
  LsgConfig cfg;
  cfg.block_size = 128;
  cfg.sparsity = 2;
  cfg.globals = 1;
  cfg.strategy = SparseStrategy::kNorm;
  const WeightBundle converted = convert(toy, cfg, 4096);
  std::size_t untouched = 0;
  for (const auto& [name, t] : toy.entries()) {
    if (name == toy.metadata.at(kPositionalEntryKey)) continue;
    WeightBundle a, b;
    a.add(name, t);
    b.add(name, converted.get(name));
    untouched += serialize_bundle(a) == serialize_bundle(b);
  }
  const bool untouched_ok = untouched + 1 == toy.size();
  const bool conv_rt =
      serialize_bundle(parse_bundle(serialize_bundle(converted))) ==
      serialize_bundle(converted);
  report(6, "conversion", bad == 0 && round_trip && untouched_ok && conv_rt,
         "sweep cases=" + std::to_string(cases) + " mismatches=" +
             std::to_string(bad) + " round-trip=" +
             (round_trip && conv_rt ? "identical" : "DIFFERS") +
             " untouched tensors=" + std::to_string(untouched) + "/" +
             std::to_string(toy.size() - 1),
         since(t0));
}

void degeneracy() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  std::size_t cases = 0;
  for (std::size_t bt : {4, 8, 16, 128}) {
    for (std::size_t n = 1; n <= bt; n += (bt > 16 ? 9 : 1)) {
      LsgConfig cfg;
      cfg.block_size = bt;
      cfg.heads = 3;
      cfg.head_dim = 4;
      cfg.precision = Precision::kDouble;
      const AttentionInputs in = random_inputs(cfg, n, n * 131 + bt);
      const Tensor a = LsgAttention(cfg).forward(in).out;
      const Tensor b = full_attention(in, cfg.heads).out;
      for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.at(i) - b.at(i)));
      }
      ++cases;
    }
  }
  report(7, "degeneracy to full attention", worst <= 1e-10,
         "cases=" + std::to_string(cases) +
             fmt(" max_abs=%.3g tol=1e-10", worst),
         since(t0));
}

}  // namespace
}  // namespace lsg

int main() {
  lsg::oracle_equivalence();
  lsg::structural_counts();
  lsg::gradients();
  lsg::causal_independence();
  lsg::complexity_scaling();
  lsg::conversion();
  lsg::degeneracy();
  std::printf("%s: %d criteria failed\n", lsg::failures ? "FAIL" : "PASS",
              lsg::failures);
  return lsg::failures ? 1 : 0;
}
