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

#ifndef LSG_DENSE_ORACLE_H_
#define LSG_DENSE_ORACLE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lsg/attention.h"
#include "lsg/config.h"
#include "lsg/tensor.h"

namespace lsg {

// Dense restatement of the blocked computation. Key slots are the n original
// keys, then every compressed sparse token (block-major), then the g global
// tokens. Query rows are the n sequence positions followed by the g globals.
// mask(h, row, slot) is set exactly for the pairs the blocked path scores.
struct AugmentedAttention {
  LsgConfig cfg;
  std::size_t length = 0;  // n
  std::size_t sparse_slots = 0;
  std::size_t slots = 0;  // n + sparse_slots + g
  Tensor keys;            // [heads x slots x head_dim]
  Tensor values;          // [heads x slots x head_dim]
  std::vector<uint8_t> mask;  // [heads x (n + g) x slots]
  // [heads][slot] contributing sequence positions; empty for global slots and
  // for invalid sparse slots.
  std::vector<std::vector<std::vector<uint32_t>>> provenance;

  std::size_t rows() const { return length + cfg.globals; }
  std::size_t sparse_begin() const { return length; }
  std::size_t global_begin() const { return length + sparse_slots; }
  bool scored(std::size_t head, std::size_t row, std::size_t slot) const {
    return mask[(head * rows() + row) * slots + slot] != 0;
  }
};

// Uses the sparse selection of `attention` (same code path as forward) and
// the keys, values, globals and key mask of `in`.
AugmentedAttention build_augmented(const LsgAttention& attention,
                                   const AttentionInputs& in);

// Plain masked attention of every query over every augmented slot.
AttentionOutput oracle_forward(const AugmentedAttention& aug,
                               const AttentionInputs& in);

struct PatternRender {
  std::string pgm;  // binary P5, maxval 1, 1 = scored
  std::string csv;  // header query,slot,positions
};

PatternRender render_pattern(const AugmentedAttention& aug, std::size_t head);

// Textbook softmax(QK^T / sqrt(dh)) V over the sequence with the globals
// prepended as extra tokens; every token sees every (unmasked) token, or
// only earlier ones when `causal`. Query rows are processed in chunks so the
// score buffer stays O(chunk * n).
AttentionOutput full_attention(const AttentionInputs& in, std::size_t heads,
                               bool causal = false, std::size_t threads = 1);

// (n + g)^2
uint64_t dense_score_entry_count(std::size_t n, std::size_t globals);

}  // namespace lsg

#endif  // LSG_DENSE_ORACLE_H_
