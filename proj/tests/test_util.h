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

#ifndef LSG_TESTS_TEST_UTIL_H_
#define LSG_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <vector>

#include "lsg/rng.h"
#include "lsg/tensor.h"

namespace lsg::testing {

inline Tensor normal(uint64_t seed, Shape shape,
                     Precision p = Precision::kDouble) {
  Rng rng(seed);
  return rng_normal(rng, shape, p);
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  return max_abs_diff(a.to_doubles(), b.to_doubles());
}

}  // namespace lsg::testing

#endif  // LSG_TESTS_TEST_UTIL_H_
