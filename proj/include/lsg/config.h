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

#ifndef LSG_CONFIG_H_
#define LSG_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "lsg/tensor.h"

namespace lsg {

enum class SparseStrategy : uint8_t {
  kNone,
  kStrided,
  kBlockStrided,
  kPooling,
  kNorm,
  kLsh,
};

const char* strategy_name(SparseStrategy s);
SparseStrategy parse_strategy(const std::string& name);

struct LsgConfig {
  std::size_t block_size = 128;
  // Sparsify factor; 0 disables sparse attention.
  std::size_t sparsity = 0;
  std::size_t globals = 0;
  SparseStrategy strategy = SparseStrategy::kNone;
  std::size_t heads = 1;
  std::size_t head_dim = 64;
  bool causal = false;
  uint64_t seed = 0;
  Precision precision = Precision::kSingle;

  std::size_t model_dim() const { return heads * head_dim; }
  // Compressed tokens each block contributes to the sparse key set.
  std::size_t slots_per_block() const {
    return sparsity == 0 ? 0 : block_size / sparsity;
  }
  std::size_t num_blocks(std::size_t n) const {
    return (n + block_size - 1) / block_size;
  }
  bool has_sparse() const { return sparsity != 0; }
};

struct ConfigStatus {
  // Sparsity outside the usual {0, 2, 4, 8}; accepted but flagged.
  bool nonstandard_sparsity = false;
};

// Throws ConfigError describing the first violated rule.
ConfigStatus validate(const LsgConfig& cfg);

std::string describe(const LsgConfig& cfg);

// Per-query key layout of one block of the blocked computation.
struct KeyLayout {
  std::size_t local_blocks = 0;
  std::size_t sparse_blocks = 0;
  std::size_t local_keys = 0;
  std::size_t sparse_keys = 0;
  std::size_t global_keys = 0;

  std::size_t width() const { return local_keys + sparse_keys + global_keys; }
};

// Depends only on (block_size, sparsity, globals, causal); it does not require
// sparsity to divide block_size.
KeyLayout key_layout(const LsgConfig& cfg);

// Largest distance between two keys a query can reach through local and
// sparse blocks: 3 * bt + 2 * bt * f.
std::size_t max_context(const LsgConfig& cfg);

}  // namespace lsg

#endif  // LSG_CONFIG_H_
