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

#ifndef LSG_CHECK_H_
#define LSG_CHECK_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsg/attention.h"
#include "lsg/config.h"

namespace lsg {

// Cartesian grid of configurations; combinations that fail validate() (for
// example strategy none with f > 0, or LSH with an odd cluster count) are
// skipped when expanded.
struct GridSpec {
  std::vector<SparseStrategy> strategies;
  std::vector<std::size_t> block_sizes;
  std::vector<std::size_t> sparsities;
  std::vector<std::size_t> globals;
  std::vector<bool> causal;
  std::vector<std::size_t> lengths;
  std::vector<Precision> precisions;
  std::size_t heads = 3;
  std::size_t head_dim = 4;
  uint64_t seed = 0;

  static GridSpec full();
  static GridSpec quick();
  // Restricts the grid to one strategy.
  GridSpec only(SparseStrategy strategy) const;
};

std::vector<LsgConfig> expand_grid(const GridSpec& grid);

// Standard-normal q, k, v and globals for `cfg` at length n.
AttentionInputs random_inputs(const LsgConfig& cfg, std::size_t n,
                              uint64_t seed);

struct PropertyResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::size_t cases = 0;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
  std::string summary() const;
};

// Blocked forward vs oracle_forward; tolerance 1e-5 single, 1e-10 double.
// max_error is reported as a multiple of the case's tolerance, so anything
// above 1 fails. Failures name the (n, bt, f) triple.
PropertyResult check_oracle_equivalence(const GridSpec& grid,
                                        const ExecOptions& opts = {});

// Scored (query, provenance) pairs agree between blocked and oracle paths; no
// position is scored twice by one query; everything lies within the
// 3 bt + 2 bt f window around the query block.
PropertyResult check_pattern_equality(const GridSpec& grid);

// Every real query's weights sum to 1 within 1e-6.
PropertyResult check_row_stochastic(const GridSpec& grid);

// Causal configs of the grid: perturbing token j moves no output at positions
// < j by more than 1e-6. `draws` random (n, j) pairs per config.
PropertyResult check_causal_independence(const GridSpec& grid,
                                         std::size_t draws);

// Appending key-masked garbage rows leaves outputs at real positions
// bitwise unchanged.
PropertyResult check_padding_neutrality(const GridSpec& grid);

// threads = 1 and threads = `threads` give bitwise equal forward and
// backward results.
PropertyResult check_schedule_equality(const GridSpec& grid,
                                       std::size_t threads);

struct GradientCheckSpec {
  std::size_t n = 12;
  std::size_t block_size = 4;
  std::size_t sparsity = 2;
  std::size_t heads = 2;
  std::size_t head_dim = 4;
  std::size_t globals = 2;
  double step = 1e-5;
  double rel_tolerance = 1e-4;
  double abs_floor = 1e-8;
  uint64_t seed = 0;
  std::vector<SparseStrategy> strategies = {
      SparseStrategy::kNone,    SparseStrategy::kStrided,
      SparseStrategy::kBlockStrided, SparseStrategy::kPooling,
      SparseStrategy::kNorm,    SparseStrategy::kLsh};
  bool include_causal = true;
};

// Analytic backward vs central differences of sum(U * out) + sum(Ug * gout),
// double precision. An entry passes when |a - fd| <= max(abs_floor,
// rel_tolerance * |fd|); max_error is the largest |a - fd| / |fd| among
// entries where the relative bound is the binding one.
PropertyResult check_gradients(const GradientCheckSpec& spec);

struct CheckOptions {
  bool quick = false;
  std::optional<SparseStrategy> strategy;
  uint64_t seed = 0;
  std::size_t threads = 2;
  std::size_t causal_draws = 20;
};

struct CheckReport {
  std::vector<PropertyResult> properties;
  bool passed() const;
  std::string text() const;
};

CheckReport run_checks(const CheckOptions& opts);

}  // namespace lsg

#endif  // LSG_CHECK_H_
