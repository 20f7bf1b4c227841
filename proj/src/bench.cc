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

#include "lsg/bench.h"

#include <algorithm>
#include <chrono>
#include <optional>
#include <sstream>
#include <vector>

#include "lsg/attention.h"
#include "lsg/check.h"
#include "lsg/dense_oracle.h"

namespace lsg {

const char* attention_kind_name(AttentionKind kind) {
  return kind == AttentionKind::kFull ? "full" : "lsg";
}

AttentionKind parse_attention_kind(const std::string& name) {
  if (name == "full") return AttentionKind::kFull;
  if (name == "lsg") return AttentionKind::kLsg;
  throw ConfigError("unknown attention kind '" + name + "' (full, lsg)");
}

uint64_t analytic_peak_bytes(AttentionKind attn, const LsgConfig& cfg,
                             std::size_t n, std::size_t threads) {
  const uint64_t eb = cfg.precision == Precision::kSingle ? 4 : 8;
  const uint64_t D = cfg.model_dim(), dh = cfg.head_dim, g = cfg.globals;
  const uint64_t workers = std::max<std::size_t>(threads, 1);
  // q, k, v, out and the global counterparts.
  uint64_t elems = 4 * (n + g) * D;
  if (attn == AttentionKind::kFull) {
    const uint64_t L = n + g, chunk = std::min<uint64_t>(64, L);
    elems += 2 * L * D;                                  // transposed keys, values
    elems += workers * (chunk * L + 2 * chunk * dh);     // scores, q, out
  } else {
    const uint64_t bt = cfg.block_size, nb = cfg.num_blocks(n);
    const uint64_t W = key_layout(cfg).width();
    elems += 3 * cfg.heads * nb * bt * dh;               // blocked q, k, v
    if (cfg.has_sparse()) {
      elems += 2 * cfg.heads * nb * cfg.slots_per_block() * dh;
    }
    elems += workers * (bt * W + 2 * W * dh + 2 * bt * dh);
  }
  return elems * eb;
}

BenchRecord bench_one(AttentionKind attn, const LsgConfig& cfg, std::size_t n,
                      const BenchOptions& opts) {
  if (n == 0) throw ConfigError("bench: sequence lengths must be positive");
  if (opts.repeats < 3) throw ConfigError("bench: repeats must be at least 3");
  const AttentionInputs in = random_inputs(cfg, n, opts.seed);
  BenchRecord rec;
  rec.attn = attn;
  rec.n = n;
  rec.cfg = cfg;
  std::optional<LsgAttention> layer;
  if (attn == AttentionKind::kLsg) layer.emplace(cfg);
  const ExecOptions exec{opts.threads, false, {}};
  auto run = [&] {
    const AttentionOutput out =
        attn == AttentionKind::kLsg
            ? layer->forward(in, exec)
            : full_attention(in, cfg.heads, cfg.causal, opts.threads);
    return out.score_entries;
  };
  run();  // warmup
  std::vector<uint64_t> times;
  for (std::size_t i = 0; i < opts.repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    rec.entries = run();
    const auto t1 = std::chrono::steady_clock::now();
    const auto ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
    times.push_back(std::max<uint64_t>(1, static_cast<uint64_t>(ns)));
  }
  std::sort(times.begin(), times.end());
  rec.time_ns = times[times.size() / 2];
  rec.peak_bytes = analytic_peak_bytes(attn, cfg, n, opts.threads);
  return rec;
}

std::string bench_csv_header() {
  return "attn,n,bt,f,g,strategy,causal,precision,time_ns,entries,peak_bytes,"
         "mem_kind";
}

std::string bench_csv_row(const BenchRecord& r) {
  std::ostringstream os;
  os << attention_kind_name(r.attn) << ',' << r.n << ',' << r.cfg.block_size
     << ',' << r.cfg.sparsity << ',' << r.cfg.globals << ','
     << strategy_name(r.cfg.strategy) << ',' << (r.cfg.causal ? 1 : 0) << ','
     << precision_name(r.cfg.precision) << ',' << r.time_ns << ','
     << r.entries << ',' << r.peak_bytes << ',' << r.mem_kind;
  return os.str();
}

}  // namespace lsg
