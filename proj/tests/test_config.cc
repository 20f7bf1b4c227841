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

#include <gtest/gtest.h>

#include "lsg/config.h"

namespace lsg {
namespace {

LsgConfig make(std::size_t bt, std::size_t f, std::size_t g,
               SparseStrategy s, bool causal = false) {
  LsgConfig cfg;
  cfg.block_size = bt;
  cfg.sparsity = f;
  cfg.globals = g;
  cfg.strategy = s;
  cfg.causal = causal;
  return cfg;
}

TEST(Config, AcceptsStandardSettings) {
  for (std::size_t f : {2, 4, 8}) {
    const ConfigStatus st = validate(make(16, f, 1, SparseStrategy::kPooling));
    EXPECT_FALSE(st.nonstandard_sparsity);
  }
  EXPECT_NO_THROW(validate(make(16, 0, 0, SparseStrategy::kNone)));
}

TEST(Config, FlagsUnusualSparsity) {
  EXPECT_TRUE(validate(make(16, 16, 0, SparseStrategy::kStrided))
                  .nonstandard_sparsity);
}

TEST(Config, RejectsInvalidCombinations) {
  EXPECT_THROW(validate(make(0, 0, 0, SparseStrategy::kNone)), ConfigError);
  EXPECT_THROW(validate(make(8, 2, 0, SparseStrategy::kNone)), ConfigError);
  EXPECT_THROW(validate(make(8, 0, 0, SparseStrategy::kNorm)), ConfigError);
  EXPECT_THROW(validate(make(8, 3, 0, SparseStrategy::kNorm)), ConfigError);
  EXPECT_THROW(validate(make(8, 1, 0, SparseStrategy::kNorm)), ConfigError);
  EXPECT_THROW(validate(make(8, 2, 1, SparseStrategy::kNorm, true)),
               ConfigError);
  // LSH needs bt / f even and at least 2.
  EXPECT_THROW(validate(make(4, 4, 0, SparseStrategy::kLsh)), ConfigError);
  EXPECT_THROW(validate(make(12, 4, 0, SparseStrategy::kLsh)), ConfigError);
  EXPECT_NO_THROW(validate(make(8, 4, 0, SparseStrategy::kLsh)));
  LsgConfig no_heads = make(8, 0, 0, SparseStrategy::kNone);
  no_heads.heads = 0;
  EXPECT_THROW(validate(no_heads), ConfigError);
}

TEST(Config, ErrorsDescribeTheConfig) {
  try {
    validate(make(8, 3, 0, SparseStrategy::kNorm));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("f=3"), std::string::npos);
  }
}

TEST(Config, StrategyNamesRoundTrip) {
  for (auto s : {SparseStrategy::kNone, SparseStrategy::kStrided,
                 SparseStrategy::kBlockStrided, SparseStrategy::kPooling,
                 SparseStrategy::kNorm, SparseStrategy::kLsh}) {
    EXPECT_EQ(parse_strategy(strategy_name(s)), s);
  }
  EXPECT_EQ(parse_strategy("block_stride"), SparseStrategy::kBlockStrided);
  EXPECT_THROW(parse_strategy("random"), ConfigError);
}

TEST(KeyLayout, WidthIsFiveBlocksPlusGlobals) {
  for (std::size_t bt : {1, 4, 8, 16, 128}) {
    for (std::size_t g : {0, 1, 4}) {
      const KeyLayout k = key_layout(make(bt, 2, g, SparseStrategy::kNorm));
      EXPECT_EQ(k.width(), 5 * bt + g);
      EXPECT_EQ(k.local_keys, 3 * bt);
      EXPECT_EQ(k.sparse_keys, 2 * bt);
    }
  }
}

TEST(KeyLayout, LocalOnlyAndCausal) {
  EXPECT_EQ(key_layout(make(8, 0, 2, SparseStrategy::kNone)).width(), 26u);
  const KeyLayout c = key_layout(make(8, 2, 0, SparseStrategy::kNorm, true));
  EXPECT_EQ(c.local_keys, 16u);
  EXPECT_EQ(c.sparse_keys, 8u);
}

TEST(KeyLayout, SmallBlockLargeSparsityInstance) {
  // bt = 2, f = 4: six local keys and four sparse keys per query.
  const KeyLayout k = key_layout(make(2, 4, 0, SparseStrategy::kPooling));
  EXPECT_EQ(k.local_keys, 6u);
  EXPECT_EQ(k.sparse_keys, 4u);
}

TEST(MaxContext, Formula) {
  EXPECT_EQ(max_context(make(2, 4, 0, SparseStrategy::kPooling)), 22u);
  EXPECT_EQ(max_context(make(128, 2, 0, SparseStrategy::kNorm)), 896u);
  EXPECT_EQ(max_context(make(16, 0, 0, SparseStrategy::kNone)), 48u);
}

}  // namespace
}  // namespace lsg
