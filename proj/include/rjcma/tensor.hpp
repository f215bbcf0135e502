// Copyright 2026 The RJCMA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rjcma {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense row-major f64 matrix. The value type for every quantity in the
/// library; autodiff nodes hold one of these.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of `data`. Throws DimensionError if the length does not
  /// match and NumericalError if any value is non-finite.
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Nested-list literal, mostly for tests: Tensor::from_rows({{1, 2}, {3, 4}}).
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);
  static Tensor ones(std::size_t rows, std::size_t cols) { return Tensor(rows, cols, 1.0); }

  std::size_t rows() const noexcept { return shape_.rows; }
  std::size_t cols() const noexcept { return shape_.cols; }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_.cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_.cols + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const { return data().subspan(r * shape_.cols, shape_.cols); }
  std::span<double> row(std::size_t r) { return data().subspan(r * shape_.cols, shape_.cols); }

  bool all_finite() const noexcept;

  /// Bitwise equality of shape and payload (distinguishes -0.0 and NaN payloads).
  bool bit_equal(const Tensor& other) const noexcept;
  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Plain (untaped) kernels. The autodiff ops and their backward rules are
// written in terms of these.
namespace kernels {

/// out = a * b. Each output element accumulates over the inner index in
/// ascending order starting from +0.0, so results do not depend on the other
/// rows/columns of the operands.
Tensor matmul(const Tensor& a, const Tensor& b);
/// out = a^T * b without materialising the transpose.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// out = a * b^T without materialising the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// In-place a += b.
void add_into(Tensor& a, const Tensor& b);

}  // namespace kernels

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace rjcma
