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

#include <cmath>
#include <set>

#include "lsg/rng.h"

namespace lsg {
namespace {

// Reference generator written directly from the published algorithm.
struct ReferenceXoshiro {
  uint64_t s[4];
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  explicit ReferenceXoshiro(uint64_t seed) {
    uint64_t state = seed;
    for (uint64_t& w : s) {
      uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      w = z ^ (z >> 31);
    }
  }
  uint64_t next() {
    const uint64_t result = rotl(s[1] * 5, 7) * 9;
    const uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

TEST(Rng, MatchesReferenceStream) {
  for (uint64_t seed : {0ULL, 1ULL, 42ULL, 0xFFFFFFFFFFFFFFFFULL}) {
    Rng rng(seed);
    ReferenceXoshiro ref(seed);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(rng.next_u64(), ref.next());
  }
}

TEST(Rng, UniformRanges) {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const double v = rng.uniform_open0();
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Rng, NormalMatchesBoxMuller) {
  Rng a(3), b(3);
  const Tensor z = rng_normal(a, {5});
  const std::vector<double> v = z.to_doubles();
  for (int pair = 0; pair < 3; ++pair) {
    const double u1 = b.uniform_open0();
    const double u2 = b.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    EXPECT_EQ(v[2 * pair], r * std::cos(2 * M_PI * u2));
    if (2 * pair + 1 < 5) {
      EXPECT_EQ(v[2 * pair + 1], r * std::sin(2 * M_PI * u2));
    }
  }
  // The odd tail consumed a full pair.
  EXPECT_EQ(a.state(), b.state());
}

TEST(Rng, NormalMoments) {
  Rng rng(17);
  const std::vector<double> v = rng_normal(rng, {200000}).to_doubles();
  double mean = 0, sq = 0;
  for (double x : v) {
    mean += x;
    sq += x * x;
  }
  mean /= v.size();
  sq /= v.size();
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sq - mean * mean, 1.0, 0.02);
}

TEST(Rng, DerivedSeedsAreDistinctAndStable) {
  std::set<uint64_t> seen;
  for (uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(5, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
  EXPECT_NE(derive_seed(5, 3), derive_seed(6, 3));
}

TEST(Rng, UniformTensorBounds) {
  Rng rng(1);
  for (double x : rng_uniform(rng, {1000}, -2.0, 3.0).to_doubles()) {
    EXPECT_GE(x, -2.0);
    EXPECT_LT(x, 3.0);
  }
}

}  // namespace
}  // namespace lsg
