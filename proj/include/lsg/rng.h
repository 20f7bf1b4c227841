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

#ifndef LSG_RNG_H_
#define LSG_RNG_H_

#include <array>
#include <cstdint>

#include "lsg/tensor.h"

namespace lsg {

// xoshiro256** seeded through splitmix64.
//
// Seeding: s[0..3] are four consecutive splitmix64 outputs starting from
// state = seed, where one splitmix64 step is
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31)
// Step: result = rotl(s1 * 5, 7) * 9, then the reference xoshiro256 state
// update with t = s1 << 17 and rotl(s3, 45).
//
// Uniforms take the top 53 bits: u = (x >> 11) * 2^-53 in [0, 1).
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  // [0, 1)
  double uniform();
  // (0, 1], safe for log().
  double uniform_open0();

  const std::array<uint64_t, 4>& state() const { return s_; }

 private:
  std::array<uint64_t, 4> s_;
};

// Independent-stream seed for work item `index` derived from `seed`.
uint64_t derive_seed(uint64_t seed, uint64_t index);

// Standard normal samples via Box-Muller. Samples are produced in pairs from
// two uniforms (u1 from uniform_open0, u2 from uniform):
//   r = sqrt(-2 ln u1); z0 = r cos(2 pi u2); z1 = r sin(2 pi u2)
// and written in order z0, z1, z0', z1', ... An odd count drops the final z1.
// Values are generated in double and then rounded to `precision`.
Tensor rng_normal(Rng& rng, const Shape& shape,
                  Precision precision = Precision::kDouble);

// Uniform samples in [lo, hi).
Tensor rng_uniform(Rng& rng, const Shape& shape, double lo, double hi,
                   Precision precision = Precision::kDouble);

}  // namespace lsg

#endif  // LSG_RNG_H_
