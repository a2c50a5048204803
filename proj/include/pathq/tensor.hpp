/*
 * Copyright 2026 The pathq Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PATHQ_TENSOR_HPP_
#define PATHQ_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pathq/error.hpp"

namespace pathq {

// Dense row-major array of rank 1 to 3 (batch x sequence x feature).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, T fill = T(0))
      : shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 3) {
      throw ShapeError("tensor rank must be 1..3");
    }
    data_.assign(count(shape_), fill);
  }

  Tensor(std::vector<std::size_t> shape, std::vector<T> values)
      : shape_(std::move(shape)), data_(std::move(values)) {
    if (shape_.empty() || shape_.size() > 3) {
      throw ShapeError("tensor rank must be 1..3");
    }
    if (data_.size() != count(shape_)) {
      throw ShapeError("value count does not match shape");
    }
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T(0)) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor vector(std::size_t n, T fill = T(0)) { return Tensor({n}, fill); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-2 view helpers; a rank-1 tensor acts as a single row.
  std::size_t rows() const { return shape_.size() == 1 ? 1 : shape_[shape_.size() - 2]; }
  std::size_t cols() const { return shape_.back(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols() + j];
  }
  T& operator()(std::size_t b, std::size_t i, std::size_t j) {
    return data_[(b * shape_[1] + i) * shape_[2] + j];
  }
  const T& operator()(std::size_t b, std::size_t i, std::size_t j) const {
    return data_[(b * shape_[1] + i) * shape_[2] + j];
  }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols(), cols()}; }
  std::span<const T> row(std::size_t i) const {
    return {data_.data() + i * cols(), cols()};
  }

  // Rank-3 batch entry as a rank-2 copy.
  Tensor slice(std::size_t b) const {
    if (rank() != 3) throw ShapeError("slice() needs a rank-3 tensor");
    const std::size_t n = shape_[1] * shape_[2];
    return Tensor({shape_[1], shape_[2]},
                  std::vector<T>(data_.begin() + static_cast<std::ptrdiff_t>(b * n),
                                 data_.begin() + static_cast<std::ptrdiff_t>((b + 1) * n)));
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor& operator+=(const Tensor& other) {
    require_same_shape(other, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void require_same_shape(const Tensor& other, const char* op) const {
    if (!same_shape(other)) {
      throw ShapeError(std::string("shape mismatch in ") + op + ": " +
                       shape_string() + " vs " + other.shape_string());
    }
  }

  std::string shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += 'x';
      s += std::to_string(shape_[i]);
    }
    return s + ']';
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  bool operator==(const Tensor&) const = default;

 private:
  static std::size_t count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

// Debug-build guard: every op output must be finite.
template <typename T>
inline void check_finite(const Tensor<T>& t, const char* op) {
#ifndef NDEBUG
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
#else
  (void)t;
  (void)op;
#endif
}

// C = A * B for A [n x k], B [k x m].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_string() + " * " + b.shape_string());
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  auto c = Tensor<T>::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    T* ci = c.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a.data()[i * k + p];
      const T* bp = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

// C = A * B^T for A [n x k], B [m x k].
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + a.shape_string() + " * " +
                     b.shape_string() + "^T");
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  auto c = Tensor<T>::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const T* ai = a.data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const T* bj = b.data() + j * k;
      T acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      c.data()[i * m + j] = acc;
    }
  }
  return c;
}

// C += A^T * B for A [k x n], B [k x m], C [n x m].
template <typename T>
void matmul_tn_accumulate(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols()) {
    throw ShapeError("matmul_tn: " + a.shape_string() + "^T * " +
                     b.shape_string() + " -> " + c.shape_string());
  }
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  for (std::size_t p = 0; p < k; ++p) {
    const T* ap = a.data() + p * n;
    const T* bp = b.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const T api = ap[i];
      T* ci = c.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += api * bp[j];
    }
  }
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  auto t = Tensor<T>::matrix(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

template <typename T>
Tensor<T> operator+(Tensor<T> a, const Tensor<T>& b) {
  a += b;
  return a;
}

// Stacks rank-2 [len x d] tensors into [batch x len x d].
template <typename T>
Tensor<T> stack(std::span<const Tensor<T>> items) {
  if (items.empty()) throw ShapeError("stack of zero tensors");
  const auto rows = items[0].rows(), cols = items[0].cols();
  Tensor<T> out({items.size(), rows, cols});
  for (std::size_t b = 0; b < items.size(); ++b) {
    if (items[b].rows() != rows || items[b].cols() != cols) {
      throw ShapeError("stack: ragged inputs");
    }
    std::copy(items[b].values().begin(), items[b].values().end(),
              out.data() + b * rows * cols);
  }
  return out;
}

}  // namespace pathq

#endif  // PATHQ_TENSOR_HPP_
