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

#ifndef LSG_TENSOR_H_
#define LSG_TENSOR_H_

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lsg/error.h"

namespace lsg {

enum class Precision : uint8_t { kSingle, kDouble };

const char* precision_name(Precision p);
Precision parse_precision(const std::string& name);

template <typename T>
concept Scalar = std::same_as<T, float> || std::same_as<T, double>;

template <Scalar T>
constexpr Precision precision_of() {
  return std::same_as<T, float> ? Precision::kSingle : Precision::kDouble;
}

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major array. The element type is fixed at construction; typed
// access with the wrong scalar type throws.
class Tensor {
 public:
  // Rank-1 tensor with zero elements.
  Tensor();
  // Zero-filled.
  Tensor(Shape shape, Precision precision);

  // Converts `values` (row-major, size must match) to `precision`. Rejects
  // non-finite input.
  static Tensor from_values(Shape shape, std::span<const double> values,
                            Precision precision);
  static Tensor from_values(Shape shape, std::initializer_list<double> values,
                            Precision precision = Precision::kDouble);

  template <Scalar T>
  static Tensor from_buffer(Shape shape, std::vector<T> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;
  Precision precision() const { return precision_; }
  std::size_t element_bytes() const {
    return precision_ == Precision::kSingle ? 4 : 8;
  }

  template <Scalar T>
  std::span<const T> data() const;
  template <Scalar T>
  std::span<T> data();

  // Element `i` of the flat buffer widened to double.
  double at(std::size_t i) const;
  std::vector<double> to_doubles() const;

  Tensor cast(Precision precision) const;
  Tensor reshaped(Shape shape) const;

  // Throws NumericError naming `what` if any element is NaN or infinite.
  void require_finite(const char* what) const;

  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  Shape shape_;
  Precision precision_ = Precision::kDouble;
  std::variant<std::vector<float>, std::vector<double>> data_;
};

// Elementwise sum of two same-shape, same-precision tensors.
Tensor add(const Tensor& a, const Tensor& b);

// a[m x k] * b[k x p]. Each output element accumulates over k in increasing
// order in the operands' precision.
Tensor matmul(const Tensor& a, const Tensor& b);

struct MaskedSoftmax {
  Tensor weights;
  // One flag per row; set when every entry of the row was masked.
  std::vector<uint8_t> fully_masked;
};

// Softmax over the last axis restricted to entries with mask != 0. Masked
// entries get weight 0; a fully masked row yields all zeros and its flag.
MaskedSoftmax softmax_masked(const Tensor& scores,
                             std::span<const uint8_t> mask);

// Euclidean norm of every row of x[m x d].
Tensor l2_norm_rows(const Tensor& x);

namespace kernels {

// c[m x p] = a[m x k] * b[k x p], row-major, i-k-j loop order so each c(i, j)
// sums its k terms left to right. `c` is overwritten.
template <Scalar T>
void gemm(std::span<const T> a, std::span<const T> b, std::span<T> c,
          std::size_t m, std::size_t k, std::size_t p);

// In-place masked softmax of one row; returns the sum of weights (0 when the
// row is fully masked).
template <Scalar T>
T softmax_row(std::span<T> row, std::span<const uint8_t> mask);

template <Scalar T>
T dot(std::span<const T> a, std::span<const T> b);

}  // namespace kernels

}  // namespace lsg

#endif  // LSG_TENSOR_H_
