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
#include <limits>
#include <vector>

#include "lsg/tensor.h"
#include "test_util.h"

namespace lsg {
namespace {

using testing::max_abs_diff;
using testing::normal;

// Reference product: for each (i, j) sum a(i, t) * b(t, j) over t = 0..k-1
// in the operands' precision.
template <typename T>
std::vector<T> triple_loop(const std::vector<T>& a, const std::vector<T>& b,
                           std::size_t m, std::size_t k, std::size_t p) {
  std::vector<T> c(m * p);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      T acc = 0;
      for (std::size_t t = 0; t < k; ++t) acc += a[i * k + t] * b[t * p + j];
      c[i * p + j] = acc;
    }
  }
  return c;
}

template <typename T>
std::vector<T> as_vector(const Tensor& t) {
  auto s = t.data<T>();
  return {s.begin(), s.end()};
}

TEST(Matmul, MatchesTripleLoopBitwiseDouble) {
  for (auto [m, k, p] : {std::tuple{1, 1, 1}, {3, 5, 2}, {7, 64, 9}, {16, 3, 33}}) {
    const Tensor a = normal(m * 100 + k, {std::size_t(m), std::size_t(k)});
    const Tensor b = normal(p * 7 + 1, {std::size_t(k), std::size_t(p)});
    const Tensor c = matmul(a, b);
    EXPECT_EQ(as_vector<double>(c),
              triple_loop(as_vector<double>(a), as_vector<double>(b), m, k, p));
  }
}

TEST(Matmul, MatchesTripleLoopBitwiseSingle) {
  const Tensor a = normal(1, {9, 17}, Precision::kSingle);
  const Tensor b = normal(2, {17, 5}, Precision::kSingle);
  EXPECT_EQ(as_vector<float>(matmul(a, b)),
            triple_loop(as_vector<float>(a), as_vector<float>(b), 9, 17, 5));
}

TEST(Matmul, RejectsMismatches) {
  EXPECT_THROW(matmul(Tensor({2, 3}, Precision::kDouble),
                      Tensor({2, 3}, Precision::kDouble)),
               ShapeError);
  EXPECT_THROW(matmul(Tensor({2, 3}, Precision::kDouble),
                      Tensor({3, 3}, Precision::kSingle)),
               ShapeError);
  EXPECT_THROW(matmul(Tensor({6}, Precision::kDouble),
                      Tensor({6}, Precision::kDouble)),
               ShapeError);
}

TEST(Softmax, MatchesExpOverSum) {
  const Tensor s = normal(3, {4, 11});
  const std::vector<uint8_t> mask(44, 1);
  const MaskedSoftmax r = softmax_masked(s, mask);
  const std::vector<double> x = s.to_doubles();
  std::vector<double> expected(44);
  for (std::size_t i = 0; i < 4; ++i) {
    double total = 0;
    for (std::size_t j = 0; j < 11; ++j) total += std::exp(x[i * 11 + j]);
    for (std::size_t j = 0; j < 11; ++j) {
      expected[i * 11 + j] = std::exp(x[i * 11 + j]) / total;
    }
  }
  EXPECT_LE(max_abs_diff(r.weights.to_doubles(), expected), 1e-15);
  for (uint8_t f : r.fully_masked) EXPECT_EQ(f, 0);
}

TEST(Softmax, MaskedEntriesGetZeroAndFullyMaskedRowsAreFlagged) {
  const Tensor s = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  const std::vector<uint8_t> mask = {1, 0, 1, 0, 0, 0};
  const MaskedSoftmax r = softmax_masked(s, mask);
  const std::vector<double> w = r.weights.to_doubles();
  EXPECT_EQ(w[1], 0.0);
  EXPECT_NEAR(w[0], 1 / (1 + std::exp(2.0)), 1e-15);
  EXPECT_NEAR(w[2], 1 / (1 + std::exp(-2.0)), 1e-15);
  EXPECT_EQ(w[3], 0.0);
  EXPECT_EQ(w[4], 0.0);
  EXPECT_EQ(w[5], 0.0);
  EXPECT_EQ(r.fully_masked, (std::vector<uint8_t>{0, 1}));
}

TEST(Softmax, ShiftInvariantForExactShifts) {
  // Dyadic scores plus integer shifts are exact in double, so the max
  // subtraction sees identical inputs and results must agree bitwise.
  Rng rng(11);
  std::vector<double> base(32);
  for (double& v : base) v = std::ldexp(std::floor(rng.uniform() * 64) - 32, -3);
  const std::vector<uint8_t> mask(32, 1);
  const Tensor ref = softmax_masked(Tensor::from_values({1, 32}, base,
                                                        Precision::kDouble),
                                    mask).weights;
  for (double shift : {-1000.0, -3.0, 7.0, 512.0}) {
    std::vector<double> shifted = base;
    for (double& v : shifted) v += shift;
    const Tensor w = softmax_masked(
        Tensor::from_values({1, 32}, shifted, Precision::kDouble), mask).weights;
    EXPECT_EQ(w, ref) << "shift " << shift;
  }
}

TEST(Softmax, LargeScoresStayFinite) {
  const Tensor s = Tensor::from_values({1, 3}, {1e30, 1e30 - 1e15, -1e30},
                                       Precision::kSingle);
  const std::vector<uint8_t> mask(3, 1);
  const Tensor w = softmax_masked(s, mask).weights;
  for (double v : w.to_doubles()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Norm, MatchesScalarLoop) {
  const Tensor x = normal(5, {6, 7});
  const std::vector<double> v = x.to_doubles();
  const std::vector<double> n = l2_norm_rows(x).to_doubles();
  ASSERT_EQ(n.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 7; ++j) s += v[i * 7 + j] * v[i * 7 + j];
    EXPECT_NEAR(n[i], std::sqrt(s), 1e-14);
  }
}

TEST(Tensor, RejectsNonFiniteValues) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(Tensor::from_values({2}, {1.0, nan}), NumericError);
  EXPECT_THROW(Tensor::from_values({1}, {inf}), NumericError);
  // Finite in double but overflows single.
  EXPECT_THROW(Tensor::from_values({1}, {1e300}, Precision::kSingle),
               NumericError);
}

TEST(Tensor, TypedAccessChecksPrecision) {
  Tensor t({2, 2}, Precision::kSingle);
  EXPECT_NO_THROW(t.data<float>());
  EXPECT_THROW(t.data<double>(), ShapeError);
  EXPECT_EQ(t.size(), 4u);
  EXPECT_EQ(t.element_bytes(), 4u);
  EXPECT_THROW(t.dim(2), ShapeError);
}

TEST(Tensor, CastRoundTripAndReshape) {
  const Tensor d = normal(8, {3, 4});
  const Tensor f = d.cast(Precision::kSingle);
  EXPECT_EQ(f.precision(), Precision::kSingle);
  EXPECT_LE(max_abs_diff(f, d), 1e-6);
  EXPECT_EQ(f.cast(Precision::kSingle), f);
  const Tensor r = d.reshaped({12});
  EXPECT_EQ(r.to_doubles(), d.to_doubles());
  EXPECT_THROW(d.reshaped({5}), ShapeError);
}

TEST(Tensor, AddIsElementwise) {
  const Tensor a = Tensor::from_values({2}, {1.5, -2});
  const Tensor b = Tensor::from_values({2}, {0.25, 4});
  EXPECT_EQ(add(a, b).to_doubles(), (std::vector<double>{1.75, 2}));
  EXPECT_THROW(add(a, Tensor({3}, Precision::kDouble)), ShapeError);
}

TEST(Precision, NamesRoundTrip) {
  for (Precision p : {Precision::kSingle, Precision::kDouble}) {
    EXPECT_EQ(parse_precision(precision_name(p)), p);
  }
  EXPECT_THROW(parse_precision("half"), ConfigError);
}

}  // namespace
}  // namespace lsg
