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

#ifndef LSG_ATTENTION_H_
#define LSG_ATTENTION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "lsg/config.h"
#include "lsg/sparse_select.h"
#include "lsg/tensor.h"

namespace lsg {

// A [n x heads*head_dim] sequence split per head into blocks of block_size
// rows; the tail block is zero-padded.
struct BlockedSequence {
  std::size_t heads = 0;
  std::size_t blocks = 0;
  std::size_t block_size = 0;
  std::size_t head_dim = 0;
  std::size_t length = 0;
  Tensor data;  // [heads x blocks x block_size x head_dim]
  // [blocks x block_size]; 0 for padding and for positions masked out by the
  // caller's key mask.
  std::vector<uint8_t> valid;

  // [blocks x block_size x head_dim] view of one head, copied.
  Tensor head(std::size_t h) const;
};

// `key_mask` (length n, empty = all kept) marks positions that may be
// attended to.
BlockedSequence chunk(const Tensor& x, const LsgConfig& cfg,
                      std::span<const uint8_t> key_mask = {});
// Inverse of chunk on the first `length` rows.
Tensor unchunk(const BlockedSequence& blocked);

// Where one key column of a block's score matrix reads from.
struct KeySlot {
  enum class Source : uint8_t { kMasked, kLocal, kSparse, kGlobal };
  Source source = Source::kMasked;
  // Sequence position (local), slot id block * slots + slot (sparse) or
  // global token index (global).
  uint32_t index = 0;

  bool masked() const { return source == Source::kMasked; }
  friend bool operator==(const KeySlot&, const KeySlot&) = default;
};

// Blocks i-1, i, i+1 (causal: i-1, i) of the key sequence; out-of-range and
// invalid positions are masked.
std::vector<KeySlot> gather_local(const BlockedSequence& keys,
                                  std::size_t block, const LsgConfig& cfg);

// Compressed tokens of blocks [i-1-f, i-2] followed by those of blocks
// [i+2, i+1+f] (dropped in causal mode). Each side holds f * (bt / f) = bt
// slots.
std::vector<KeySlot> gather_sparse(const SparseSlice& sparse,
                                   std::size_t block, const LsgConfig& cfg);

// Full key row of one block: local, then sparse, then the global tokens.
std::vector<KeySlot> assemble_block_keys(std::vector<KeySlot> local,
                                         const std::vector<KeySlot>& sparse,
                                         const LsgConfig& cfg);

// Whether the query at sequence position `query_pos` scores `slot`; applies
// the in-block causal triangle on top of the slot mask.
bool slot_visible(const KeySlot& slot, std::size_t query_pos,
                  const LsgConfig& cfg);

// Score-matrix entries the blocked computation evaluates for a length-n
// sequence: blocks * bt * width + g * (n + g).
uint64_t score_entry_count(const LsgConfig& cfg, std::size_t n);

struct AttentionInputs {
  Tensor q, k, v;  // [n x heads*head_dim]
  // [g x heads*head_dim]; may be left default-constructed when g = 0.
  Tensor global_q, global_k, global_v;
  // Length n, nonzero where the key may be attended to. Empty keeps all.
  std::vector<uint8_t> key_mask;
};

struct ForwardCache;

struct AttentionOutput {
  Tensor out;         // [n x heads*head_dim]
  Tensor global_out;  // [g x heads*head_dim]
  // [heads x (n + g)] attention weight sums; rows with no visible key are 0.
  std::vector<double> weights_checksum;
  uint64_t score_entries = 0;
  std::shared_ptr<const ForwardCache> cache;
};

struct Gradients {
  Tensor dq, dk, dv;
  Tensor d_global_q, d_global_k, d_global_v;
};

using LocalGatherFn = std::function<std::vector<KeySlot>(
    const BlockedSequence&, std::size_t, const LsgConfig&)>;

struct ExecOptions {
  std::size_t threads = 1;
  // Retain what backward() needs.
  bool keep_cache = false;
  // Replaces gather_local; used by fault-injection tests.
  LocalGatherFn local_gather;
};

// A configured attention layer. Construction validates the config and draws
// the per-head LSH projections, which stay fixed for the instance.
class LsgAttention {
 public:
  explicit LsgAttention(LsgConfig cfg);

  const LsgConfig& config() const { return cfg_; }
  const ConfigStatus& status() const { return status_; }
  std::span<const LshProjection> projections() const { return projections_; }

  SparseBlockSet build_sparse(const BlockedSequence& keys,
                              const BlockedSequence& values) const;

  AttentionOutput forward(const AttentionInputs& in,
                          const ExecOptions& opts = {}) const;

  // Gradients of sum(d_out * out) + sum(d_global_out * global_out). Discrete
  // choices (norm top-k, LSH buckets) are held fixed.
  Gradients backward(const AttentionOutput& forward_result,
                     const Tensor& d_out, const Tensor& d_global_out,
                     std::size_t threads = 1) const;

 private:
  LsgConfig cfg_;
  ConfigStatus status_;
  std::vector<LshProjection> projections_;
};

// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace lsg

#endif  // LSG_ATTENTION_H_
