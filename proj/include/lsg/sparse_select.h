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

#ifndef LSG_SPARSE_SELECT_H_
#define LSG_SPARSE_SELECT_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lsg/config.h"
#include "lsg/tensor.h"

namespace lsg {

// Compressed keys/values of one head: `slots` tokens per block.
struct SparseSlice {
  std::size_t blocks = 0;
  std::size_t slots = 0;
  Tensor keys;    // [blocks x slots x head_dim]
  Tensor values;  // [blocks x slots x head_dim]
  // Original sequence positions averaged into each slot, ascending. A slot
  // with valid == 0 has empty provenance and zero key/value rows.
  std::vector<std::vector<uint32_t>> provenance;  // blocks * slots
  std::vector<uint8_t> valid;                     // blocks * slots

  std::size_t slot_id(std::size_t block, std::size_t slot) const {
    return block * slots + slot;
  }
};

// One entry per head.
struct SparseBlockSet {
  std::vector<SparseSlice> heads;
};

// Random projection of one head for LSH bucketing: h(x) = argmax([xR; -xR]).
struct LshProjection {
  Tensor r;  // [head_dim x clusters / 2]
  std::size_t clusters = 0;
};

// One projection per head, drawn in head order from Rng(cfg.seed). Empty when
// the strategy is not LSH.
std::vector<LshProjection> make_lsh_projections(const LsgConfig& cfg);

// All selectors take one head's keys and values as [blocks x bt x head_dim]
// and a per-position validity mask [blocks x bt] (empty means all valid).
// Invalid positions never contribute to a slot.

// Head h keeps offsets o, o + f, o + 2f, ... with o = h mod f.
SparseSlice select_strided(const Tensor& keys, const Tensor& values,
                           std::size_t sparsity, std::size_t head,
                           std::span<const uint8_t> valid = {});

// Head h keeps the contiguous segment starting at (h mod f) * (bt / f).
SparseSlice select_block_strided(const Tensor& keys, const Tensor& values,
                                 std::size_t sparsity, std::size_t head,
                                 std::span<const uint8_t> valid = {});

// Means over non-overlapping windows of f positions (valid positions only).
SparseSlice pool_average(const Tensor& keys, const Tensor& values,
                         std::size_t sparsity,
                         std::span<const uint8_t> valid = {});

// The bt / f positions with the largest key norm, kept in sequence order.
// Ties go to the lower position.
SparseSlice select_max_norm(const Tensor& keys, const Tensor& values,
                            std::size_t sparsity,
                            std::span<const uint8_t> valid = {});

// Buckets every valid position by its key and averages keys and values per
// bucket; bucket c fills slot c. Empty buckets are invalid slots.
SparseSlice lsh_cluster(const Tensor& keys, const Tensor& values,
                        std::size_t sparsity, const LshProjection& proj,
                        std::span<const uint8_t> valid = {});

// Bucket index of every row of x[m x head_dim]; ties go to the lowest index.
std::vector<std::size_t> lsh_buckets(const Tensor& x,
                                     const LshProjection& proj);

// Dispatches on cfg.strategy for head `head`.
SparseSlice select_sparse(const LsgConfig& cfg, const Tensor& keys,
                          const Tensor& values, std::size_t head,
                          std::span<const LshProjection> projections,
                          std::span<const uint8_t> valid = {});

}  // namespace lsg

#endif  // LSG_SPARSE_SELECT_H_
