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

#ifndef LSG_BENCH_H_
#define LSG_BENCH_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "lsg/config.h"

namespace lsg {

enum class AttentionKind : uint8_t { kFull, kLsg };

const char* attention_kind_name(AttentionKind kind);
AttentionKind parse_attention_kind(const std::string& name);

struct BenchRecord {
  AttentionKind attn = AttentionKind::kLsg;
  std::size_t n = 0;
  LsgConfig cfg;
  uint64_t time_ns = 0;  // median over the timed repeats
  uint64_t entries = 0;
  uint64_t peak_bytes = 0;
  std::string mem_kind = "analytic";
};

struct BenchOptions {
  std::size_t repeats = 3;  // timed runs after one discarded warmup
  std::size_t threads = 1;
  uint64_t seed = 0;
};

// Times one forward pass of `attn` at length n. Full attention uses
// cfg.heads, cfg.globals and cfg.causal and ignores the block settings.
BenchRecord bench_one(AttentionKind attn, const LsgConfig& cfg, std::size_t n,
                      const BenchOptions& opts);

// Live buffers of one forward pass: inputs, outputs, blocked copies, sparse
// tokens and per-worker scratch.
uint64_t analytic_peak_bytes(AttentionKind attn, const LsgConfig& cfg,
                             std::size_t n, std::size_t threads);

std::string bench_csv_header();
std::string bench_csv_row(const BenchRecord& r);

}  // namespace lsg

#endif  // LSG_BENCH_H_
