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

#include "lsg/config.h"

#include <sstream>

namespace lsg {

const char* strategy_name(SparseStrategy s) {
  switch (s) {
    case SparseStrategy::kNone:
      return "none";
    case SparseStrategy::kStrided:
      return "strided";
    case SparseStrategy::kBlockStrided:
      return "block_strided";
    case SparseStrategy::kPooling:
      return "pooling";
    case SparseStrategy::kNorm:
      return "norm";
    case SparseStrategy::kLsh:
      return "lsh";
  }
  return "?";
}

SparseStrategy parse_strategy(const std::string& name) {
  for (auto s : {SparseStrategy::kNone, SparseStrategy::kStrided,
                 SparseStrategy::kBlockStrided, SparseStrategy::kPooling,
                 SparseStrategy::kNorm, SparseStrategy::kLsh}) {
    if (name == strategy_name(s)) return s;
  }
  if (name == "stride") return SparseStrategy::kStrided;
  if (name == "block_stride" || name == "blockstride") {
    return SparseStrategy::kBlockStrided;
  }
  throw ConfigError("unknown sparse strategy '" + name + "'");
}

ConfigStatus validate(const LsgConfig& cfg) {
  auto fail = [&](const std::string& why) {
    throw ConfigError("invalid config (" + describe(cfg) + "): " + why);
  };
  if (cfg.block_size < 1) fail("block size must be >= 1");
  if (cfg.heads < 1) fail("heads must be >= 1");
  if (cfg.head_dim < 1) fail("head dim must be >= 1");
  if ((cfg.strategy == SparseStrategy::kNone) != (cfg.sparsity == 0)) {
    fail("strategy 'none' goes with sparsity 0 and only with it");
  }
  if (cfg.causal && cfg.globals > 0) fail("causal mode requires 0 globals");
  ConfigStatus status;
  if (cfg.sparsity != 0) {
    if (cfg.sparsity < 2) fail("sparsity must be 0 or >= 2");
    if (cfg.block_size % cfg.sparsity != 0) {
      fail("sparsity must divide the block size");
    }
    if (cfg.strategy == SparseStrategy::kLsh) {
      const std::size_t clusters = cfg.slots_per_block();
      if (clusters < 2 || clusters % 2 != 0) {
        fail("lsh needs an even cluster count >= 2 (block / sparsity)");
      }
    }
    status.nonstandard_sparsity =
        cfg.sparsity != 2 && cfg.sparsity != 4 && cfg.sparsity != 8;
  }
  return status;
}

std::string describe(const LsgConfig& cfg) {
  std::ostringstream os;
  os << "bt=" << cfg.block_size << " f=" << cfg.sparsity
     << " g=" << cfg.globals << " strategy=" << strategy_name(cfg.strategy)
     << " heads=" << cfg.heads << " dh=" << cfg.head_dim
     << " causal=" << (cfg.causal ? 1 : 0) << " seed=" << cfg.seed
     << " precision=" << precision_name(cfg.precision);
  return os.str();
}

KeyLayout key_layout(const LsgConfig& cfg) {
  KeyLayout layout;
  layout.local_blocks = cfg.causal ? 2 : 3;
  layout.sparse_blocks = cfg.sparsity == 0 ? 0 : (cfg.causal ? 1 : 2);
  layout.local_keys = layout.local_blocks * cfg.block_size;
  layout.sparse_keys = layout.sparse_blocks * cfg.block_size;
  layout.global_keys = cfg.globals;
  return layout;
}

std::size_t max_context(const LsgConfig& cfg) {
  return 3 * cfg.block_size + 2 * cfg.block_size * cfg.sparsity;
}

}  // namespace lsg
