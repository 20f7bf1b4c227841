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

#include "lsg/sparse_select.h"

#include <algorithm>
#include <numeric>
#include <string>

#include "lsg/rng.h"

namespace lsg {

namespace {

using Groups = std::vector<std::vector<std::size_t>>;

struct BlockGeometry {
  std::size_t blocks;
  std::size_t block_size;
  std::size_t head_dim;
  std::size_t slots;
};

BlockGeometry check_inputs(const char* op, const Tensor& keys,
                           const Tensor& values, std::size_t sparsity,
                           std::span<const uint8_t> valid) {
  if (keys.rank() != 3) {
    throw ShapeError(std::string(op) + ": keys must be [blocks x bt x dh], got " +
                     shape_str(keys.shape()));
  }
  if (values.shape() != keys.shape()) {
    throw ShapeError(std::string(op) + ": values " + shape_str(values.shape()) +
                     " differ from keys " + shape_str(keys.shape()));
  }
  if (values.precision() != keys.precision()) {
    throw ShapeError(std::string(op) + ": key/value precision mismatch");
  }
  const BlockGeometry g{keys.dim(0), keys.dim(1), keys.dim(2), 0};
  if (sparsity < 2) {
    throw ConfigError(std::string(op) + ": sparsity must be >= 2");
  }
  if (g.block_size % sparsity != 0) {
    throw ConfigError(std::string(op) + ": sparsity " +
                      std::to_string(sparsity) +
                      " does not divide block size " +
                      std::to_string(g.block_size));
  }
  if (!valid.empty() && valid.size() != g.blocks * g.block_size) {
    throw ShapeError(std::string(op) + ": validity mask has " +
                     std::to_string(valid.size()) + " entries, expected " +
                     std::to_string(g.blocks * g.block_size));
  }
  return {g.blocks, g.block_size, g.head_dim, g.block_size / sparsity};
}

bool is_valid(std::span<const uint8_t> valid, std::size_t pos) {
  return valid.empty() || valid[pos] != 0;
}

// Slot t of block b averages the rows at offsets groups(b)[t]; offsets are
// relative to the block and must already exclude invalid positions.
template <Scalar T, typename GroupFn>
SparseSlice build_slice_typed(const BlockGeometry& g, const Tensor& keys,
                              const Tensor& values, GroupFn&& groups_of) {
  SparseSlice out;
  out.blocks = g.blocks;
  out.slots = g.slots;
  out.provenance.resize(g.blocks * g.slots);
  out.valid.assign(g.blocks * g.slots, 0);
  const std::size_t d = g.head_dim;
  std::vector<T> tk(g.blocks * g.slots * d, T(0));
  std::vector<T> tv(g.blocks * g.slots * d, T(0));
  auto kin = keys.data<T>();
  auto vin = values.data<T>();
  for (std::size_t b = 0; b < g.blocks; ++b) {
    const Groups groups = groups_of(b);
    for (std::size_t t = 0; t < g.slots; ++t) {
      const auto& members = groups[t];
      if (members.empty()) continue;
      const std::size_t id = b * g.slots + t;
      T* krow = tk.data() + id * d;
      T* vrow = tv.data() + id * d;
      for (std::size_t off : members) {
        const std::size_t pos = b * g.block_size + off;
        for (std::size_t c = 0; c < d; ++c) {
          krow[c] += kin[pos * d + c];
          vrow[c] += vin[pos * d + c];
        }
        out.provenance[id].push_back(static_cast<uint32_t>(pos));
      }
      if (members.size() > 1) {
        const T count = static_cast<T>(members.size());
        for (std::size_t c = 0; c < d; ++c) {
          krow[c] /= count;
          vrow[c] /= count;
        }
      }
      out.valid[id] = 1;
    }
  }
  out.keys = Tensor::from_buffer<T>({g.blocks, g.slots, d}, std::move(tk));
  out.values = Tensor::from_buffer<T>({g.blocks, g.slots, d}, std::move(tv));
  return out;
}

template <typename GroupFn>
SparseSlice build_slice(const BlockGeometry& g, const Tensor& keys,
                        const Tensor& values, GroupFn&& groups_of) {
  if (keys.precision() == Precision::kSingle) {
    return build_slice_typed<float>(g, keys, values, groups_of);
  }
  return build_slice_typed<double>(g, keys, values, groups_of);
}

}  // namespace

std::vector<LshProjection> make_lsh_projections(const LsgConfig& cfg) {
  std::vector<LshProjection> out;
  if (cfg.strategy != SparseStrategy::kLsh) return out;
  const std::size_t clusters = cfg.slots_per_block();
  Rng rng(cfg.seed);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    out.push_back({rng_normal(rng, {cfg.head_dim, clusters / 2}, cfg.precision),
                   clusters});
  }
  return out;
}

SparseSlice select_strided(const Tensor& keys, const Tensor& values,
                           std::size_t sparsity, std::size_t head,
                           std::span<const uint8_t> valid) {
  const auto g = check_inputs("select_strided", keys, values, sparsity, valid);
  const std::size_t offset = head % sparsity;
  return build_slice(g, keys, values, [&](std::size_t b) {
    Groups groups(g.slots);
    for (std::size_t t = 0; t < g.slots; ++t) {
      const std::size_t off = offset + t * sparsity;
      if (is_valid(valid, b * g.block_size + off)) groups[t].push_back(off);
    }
    return groups;
  });
}

SparseSlice select_block_strided(const Tensor& keys, const Tensor& values,
                                 std::size_t sparsity, std::size_t head,
                                 std::span<const uint8_t> valid) {
  const auto g =
      check_inputs("select_block_strided", keys, values, sparsity, valid);
  const std::size_t start = (head % sparsity) * g.slots;
  return build_slice(g, keys, values, [&](std::size_t b) {
    Groups groups(g.slots);
    for (std::size_t t = 0; t < g.slots; ++t) {
      if (is_valid(valid, b * g.block_size + start + t)) {
        groups[t].push_back(start + t);
      }
    }
    return groups;
  });
}

SparseSlice pool_average(const Tensor& keys, const Tensor& values,
                         std::size_t sparsity,
                         std::span<const uint8_t> valid) {
  const auto g = check_inputs("pool_average", keys, values, sparsity, valid);
  return build_slice(g, keys, values, [&](std::size_t b) {
    Groups groups(g.slots);
    for (std::size_t t = 0; t < g.slots; ++t) {
      for (std::size_t w = 0; w < sparsity; ++w) {
        const std::size_t off = t * sparsity + w;
        if (is_valid(valid, b * g.block_size + off)) groups[t].push_back(off);
      }
    }
    return groups;
  });
}

SparseSlice select_max_norm(const Tensor& keys, const Tensor& values,
                            std::size_t sparsity,
                            std::span<const uint8_t> valid) {
  const auto g = check_inputs("select_max_norm", keys, values, sparsity, valid);
  const Tensor norms =
      l2_norm_rows(keys.reshaped({g.blocks * g.block_size, g.head_dim}));
  const std::vector<double> norm = norms.to_doubles();
  return build_slice(g, keys, values, [&](std::size_t b) {
    std::vector<std::size_t> candidates;
    for (std::size_t off = 0; off < g.block_size; ++off) {
      if (is_valid(valid, b * g.block_size + off)) candidates.push_back(off);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t x, std::size_t y) {
                       return norm[b * g.block_size + x] >
                              norm[b * g.block_size + y];
                     });
    if (candidates.size() > g.slots) candidates.resize(g.slots);
    std::sort(candidates.begin(), candidates.end());
    Groups groups(g.slots);
    for (std::size_t t = 0; t < candidates.size(); ++t) {
      groups[t].push_back(candidates[t]);
    }
    return groups;
  });
}

std::vector<std::size_t> lsh_buckets(const Tensor& x,
                                     const LshProjection& proj) {
  if (proj.clusters < 2 || proj.clusters % 2 != 0) {
    throw ConfigError("lsh: cluster count must be even and >= 2, got " +
                      std::to_string(proj.clusters));
  }
  if (proj.r.rank() != 2 || proj.r.dim(1) != proj.clusters / 2) {
    throw ShapeError("lsh: projection " + shape_str(proj.r.shape()) +
                     " does not have clusters / 2 columns");
  }
  const Tensor projected = matmul(x, proj.r);
  const std::size_t half = proj.clusters / 2;
  const std::vector<double> p = projected.to_doubles();
  std::vector<std::size_t> buckets(x.dim(0));
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    std::size_t best = 0;
    double best_value = p[i * half];
    for (std::size_t c = 1; c < proj.clusters; ++c) {
      const double v = c < half ? p[i * half + c] : -p[i * half + c - half];
      if (v > best_value) {
        best_value = v;
        best = c;
      }
    }
    buckets[i] = best;
  }
  return buckets;
}

SparseSlice lsh_cluster(const Tensor& keys, const Tensor& values,
                        std::size_t sparsity, const LshProjection& proj,
                        std::span<const uint8_t> valid) {
  const auto g = check_inputs("lsh_cluster", keys, values, sparsity, valid);
  if (proj.clusters != g.slots) {
    throw ConfigError("lsh: projection has " + std::to_string(proj.clusters) +
                      " clusters but blocks produce " +
                      std::to_string(g.slots) + " slots");
  }
  const std::vector<std::size_t> bucket =
      lsh_buckets(keys.reshaped({g.blocks * g.block_size, g.head_dim}), proj);
  return build_slice(g, keys, values, [&](std::size_t b) {
    Groups groups(g.slots);
    for (std::size_t off = 0; off < g.block_size; ++off) {
      const std::size_t pos = b * g.block_size + off;
      if (is_valid(valid, pos)) groups[bucket[pos]].push_back(off);
    }
    return groups;
  });
}

SparseSlice select_sparse(const LsgConfig& cfg, const Tensor& keys,
                          const Tensor& values, std::size_t head,
                          std::span<const LshProjection> projections,
                          std::span<const uint8_t> valid) {
  switch (cfg.strategy) {
    case SparseStrategy::kStrided:
      return select_strided(keys, values, cfg.sparsity, head, valid);
    case SparseStrategy::kBlockStrided:
      return select_block_strided(keys, values, cfg.sparsity, head, valid);
    case SparseStrategy::kPooling:
      return pool_average(keys, values, cfg.sparsity, valid);
    case SparseStrategy::kNorm:
      return select_max_norm(keys, values, cfg.sparsity, valid);
    case SparseStrategy::kLsh:
      if (head >= projections.size()) {
        throw ConfigError("lsh: no projection for head " +
                          std::to_string(head));
      }
      return lsh_cluster(keys, values, cfg.sparsity, projections[head], valid);
    case SparseStrategy::kNone:
      break;
  }
  throw ConfigError("select_sparse called with strategy 'none'");
}

}  // namespace lsg
