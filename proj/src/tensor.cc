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

#include "lsg/tensor.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>

namespace lsg {

const char* precision_name(Precision p) {
  return p == Precision::kSingle ? "single" : "double";
}

Precision parse_precision(const std::string& name) {
  if (name == "single" || name == "f32" || name == "float32") {
    return Precision::kSingle;
  }
  if (name == "double" || name == "f64" || name == "float64") {
    return Precision::kDouble;
  }
  throw ConfigError("unknown precision '" + name + "'");
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor() : shape_{0}, data_(std::vector<double>{}) {}

Tensor::Tensor(Shape shape, Precision precision)
    : shape_(std::move(shape)), precision_(precision) {
  const std::size_t n = shape_numel(shape_);
  if (precision_ == Precision::kSingle) {
    data_ = std::vector<float>(n, 0.0f);
  } else {
    data_ = std::vector<double>(n, 0.0);
  }
}

Tensor Tensor::from_values(Shape shape, std::span<const double> values,
                           Precision precision) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("from_values: shape " + shape_str(shape) + " needs " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  Tensor t(std::move(shape), precision);
  if (precision == Precision::kSingle) {
    auto out = t.data<float>();
    for (std::size_t i = 0; i < values.size(); ++i) {
      out[i] = static_cast<float>(values[i]);
    }
  } else {
    std::copy(values.begin(), values.end(), t.data<double>().begin());
  }
  t.require_finite("from_values");
  return t;
}

Tensor Tensor::from_values(Shape shape, std::initializer_list<double> values,
                           Precision precision) {
  return from_values(std::move(shape),
                     std::span<const double>(values.begin(), values.size()),
                     precision);
}

template <Scalar T>
Tensor Tensor::from_buffer(Shape shape, std::vector<T> data) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("from_buffer: shape " + shape_str(shape) +
                     " does not match buffer of " +
                     std::to_string(data.size()));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.precision_ = precision_of<T>();
  t.data_ = std::move(data);
  t.require_finite("from_buffer");
  return t;
}

template Tensor Tensor::from_buffer<float>(Shape, std::vector<float>);
template Tensor Tensor::from_buffer<double>(Shape, std::vector<double>);

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_str(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::size() const {
  return std::visit([](const auto& v) { return v.size(); }, data_);
}

template <Scalar T>
std::span<const T> Tensor::data() const {
  const auto* v = std::get_if<std::vector<T>>(&data_);
  if (v == nullptr) {
    throw ShapeError(std::string("tensor holds ") +
                     precision_name(precision_) + " data, requested " +
                     precision_name(precision_of<T>()));
  }
  return {v->data(), v->size()};
}

template <Scalar T>
std::span<T> Tensor::data() {
  auto* v = std::get_if<std::vector<T>>(&data_);
  if (v == nullptr) {
    throw ShapeError(std::string("tensor holds ") +
                     precision_name(precision_) + " data, requested " +
                     precision_name(precision_of<T>()));
  }
  return {v->data(), v->size()};
}

template std::span<const float> Tensor::data<float>() const;
template std::span<const double> Tensor::data<double>() const;
template std::span<float> Tensor::data<float>();
template std::span<double> Tensor::data<double>();

double Tensor::at(std::size_t i) const {
  return std::visit([i](const auto& v) { return static_cast<double>(v.at(i)); },
                    data_);
}

std::vector<double> Tensor::to_doubles() const {
  return std::visit(
      [](const auto& v) { return std::vector<double>(v.begin(), v.end()); },
      data_);
}

Tensor Tensor::cast(Precision precision) const {
  if (precision == precision_) return *this;
  const auto values = to_doubles();
  return from_values(shape_, values, precision);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != size()) {
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " +
                     shape_str(shape));
  }
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

void Tensor::require_finite(const char* what) const {
  std::visit(
      [what](const auto& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (!std::isfinite(v[i])) {
            throw NumericError(std::string(what) +
                               ": non-finite value at flat index " +
                               std::to_string(i));
          }
        }
      },
      data_);
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.shape_ == b.shape_ && a.data_ == b.data_;
}

namespace {

void require_same_precision(const Tensor& a, const Tensor& b, const char* op) {
  if (a.precision() != b.precision()) {
    throw ShapeError(std::string(op) + ": precision mismatch (" +
                     precision_name(a.precision()) + " vs " +
                     precision_name(b.precision()) + ")");
  }
}

template <typename Fn>
decltype(auto) dispatch(Precision p, Fn&& fn) {
  if (p == Precision::kSingle) return fn(float{});
  return fn(double{});
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_precision(a, b, "add");
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  Tensor out(a.shape(), a.precision());
  dispatch(a.precision(), [&](auto tag) {
    using T = decltype(tag);
    auto x = a.data<T>();
    auto y = b.data<T>();
    auto z = out.data<T>();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
  });
  out.require_finite("add");
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_precision(a, b, "matmul");
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul: operands must be rank 2, got " +
                     shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner extents differ " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  }
  Tensor out({m, p}, a.precision());
  dispatch(a.precision(), [&](auto tag) {
    using T = decltype(tag);
    kernels::gemm<T>(a.data<T>(), b.data<T>(), out.data<T>(), m, k, p);
  });
  out.require_finite("matmul");
  return out;
}

MaskedSoftmax softmax_masked(const Tensor& scores,
                             std::span<const uint8_t> mask) {
  if (scores.rank() == 0) throw ShapeError("softmax_masked: rank-0 scores");
  if (mask.size() != scores.size()) {
    throw ShapeError("softmax_masked: mask has " + std::to_string(mask.size()) +
                     " entries for scores " + shape_str(scores.shape()));
  }
  const std::size_t cols = scores.shape().back();
  const std::size_t rows = cols == 0 ? 0 : scores.size() / cols;
  MaskedSoftmax result{scores, std::vector<uint8_t>(rows, 0)};
  dispatch(scores.precision(), [&](auto tag) {
    using T = decltype(tag);
    auto w = result.weights.template data<T>();
    for (std::size_t r = 0; r < rows; ++r) {
      const T sum = kernels::softmax_row<T>(w.subspan(r * cols, cols),
                                            mask.subspan(r * cols, cols));
      result.fully_masked[r] = sum == T(0);
    }
  });
  result.weights.require_finite("softmax_masked");
  return result;
}

Tensor l2_norm_rows(const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) < 1) {
    throw ShapeError("l2_norm_rows: expected [m x d] with d >= 1, got " +
                     shape_str(x.shape()));
  }
  const std::size_t m = x.dim(0), d = x.dim(1);
  Tensor out({m}, x.precision());
  dispatch(x.precision(), [&](auto tag) {
    using T = decltype(tag);
    auto in = x.data<T>();
    auto o = out.data<T>();
    for (std::size_t i = 0; i < m; ++i) {
      auto row = in.subspan(i * d, d);
      o[i] = std::sqrt(kernels::dot<T>(row, row));
    }
  });
  out.require_finite("l2_norm_rows");
  return out;
}

namespace kernels {

template <Scalar T>
void gemm(std::span<const T> a, std::span<const T> b, std::span<T> c,
          std::size_t m, std::size_t k, std::size_t p) {
  std::fill(c.begin(), c.begin() + m * p, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* __restrict crow = c.data() + i * p;
    const T* arow = a.data() + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T aik = arow[kk];
      const T* __restrict brow = b.data() + kk * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
    }
  }
}

template <Scalar T>
T softmax_row(std::span<T> row, std::span<const uint8_t> mask) {
  T max = -std::numeric_limits<T>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (mask[j] && (!any || row[j] > max)) {
      max = row[j];
      any = true;
    }
  }
  if (!any) {
    std::fill(row.begin(), row.end(), T(0));
    return T(0);
  }
  T sum = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (mask[j]) {
      row[j] = std::exp(row[j] - max);
      sum += row[j];
    } else {
      row[j] = T(0);
    }
  }
  const T inv = T(1) / sum;
  T total = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    row[j] *= inv;
    total += row[j];
  }
  return total;
}

template <Scalar T>
T dot(std::span<const T> a, std::span<const T> b) {
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template void gemm<float>(std::span<const float>, std::span<const float>,
                          std::span<float>, std::size_t, std::size_t,
                          std::size_t);
template void gemm<double>(std::span<const double>, std::span<const double>,
                           std::span<double>, std::size_t, std::size_t,
                           std::size_t);
template float softmax_row<float>(std::span<float>, std::span<const uint8_t>);
template double softmax_row<double>(std::span<double>,
                                    std::span<const uint8_t>);
template float dot<float>(std::span<const float>, std::span<const float>);
template double dot<double>(std::span<const double>, std::span<const double>);

}  // namespace kernels

}  // namespace lsg
