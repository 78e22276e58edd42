//
// Copyright 2026 The fedhkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fedhkd {

// Dense row-major array of 64-bit floats. All model math runs on doubles so
// gradient checks and the differential-privacy variance tests stay sharp.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);
  static Tensor full(std::vector<std::size_t> shape, double value);
  static Tensor zeros_like(const Tensor& other);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-2 accessors.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }
  std::span<double> row_span(std::size_t r);
  std::span<const double> row_span(std::size_t r) const;

  // Returns the rank-1 tensor holding row r of a rank-2 tensor.
  Tensor row_copy(std::size_t r) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  std::string shape_str() const;

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Matrix products for the dense layer and its backward pass.
Tensor matmul(const Tensor& a, const Tensor& b);        // (m,k)·(k,n)
Tensor matmul_at_b(const Tensor& a, const Tensor& b);   // aᵀ·b, a is (k,m)
Tensor matmul_a_bt(const Tensor& a, const Tensor& b);   // a·bᵀ, b is (n,k)

// y += alpha * x (shapes must match).
void axpy(double alpha, const Tensor& x, Tensor& y);

// Sum over rows of a rank-2 tensor, yielding a rank-1 tensor of length cols.
Tensor column_sums(const Tensor& m);

// Row-broadcast add of a rank-1 bias onto a rank-2 tensor.
void add_row_vector(Tensor& m, const Tensor& bias);

double squared_distance(const Tensor& a, const Tensor& b);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace fedhkd
