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

#include "fedhkd/tensor.hpp"

#include <cmath>
#include <sstream>

#include "fedhkd/error.hpp"

namespace fedhkd {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) {
    if (extent == 0) throw ShapeError("Tensor: zero extent in shape");
    n *= extent;
  }
  return shape.empty() ? 0 : n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_product(shape_) != data_.size())
    throw ShapeError("Tensor: shape " + shape_str() + " does not match " +
                     std::to_string(data_.size()) + " values");
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  Tensor t(std::move(shape));
  for (auto& v : t.data_) v = value;
  return t;
}

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape_); }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size())
    throw ShapeError("Tensor::dim: axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str());
  return shape_[axis];
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw ShapeError("Tensor::rows: tensor is not rank-2");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ShapeError("Tensor::cols: tensor is not rank-2");
  return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  return data_[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return data_[r * cols() + c];
}

std::span<double> Tensor::row_span(std::size_t r) {
  const std::size_t c = cols();
  return {data_.data() + r * c, c};
}

std::span<const double> Tensor::row_span(std::size_t r) const {
  const std::size_t c = cols();
  return {data_.data() + r * c, c};
}

Tensor Tensor::row_copy(std::size_t r) const {
  const auto span = row_span(r);
  return Tensor::vector(std::vector<double>(span.begin(), span.end()));
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ", ";
    os << shape_[i];
  }
  os << ')';
  return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
    throw ShapeError("matmul: incompatible shapes " + a.shape_str() + " x " +
                     b.shape_str());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      if (aip == 0.0) continue;
      const auto brow = b.row_span(p);
      auto orow = out.row_span(i);
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

Tensor matmul_at_b(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows())
    throw ShapeError("matmul_at_b: incompatible shapes " + a.shape_str() +
                     " x " + b.shape_str());
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  Tensor out({m, n});
  for (std::size_t p = 0; p < k; ++p) {
    const auto arow = a.row_span(p);
    const auto brow = b.row_span(p);
    for (std::size_t i = 0; i < m; ++i) {
      const double aip = arow[i];
      if (aip == 0.0) continue;
      auto orow = out.row_span(i);
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

Tensor matmul_a_bt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
    throw ShapeError("matmul_a_bt: incompatible shapes " + a.shape_str() +
                     " x " + b.shape_str());
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const auto arow = a.row_span(i);
    auto orow = out.row_span(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto brow = b.row_span(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      orow[j] = acc;
    }
  }
  return out;
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
  if (!x.same_shape(y))
    throw ShapeError("axpy: shape mismatch " + x.shape_str() + " vs " +
                     y.shape_str());
  const auto& xs = x.values();
  auto& ys = y.values();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] += alpha * xs[i];
}

Tensor column_sums(const Tensor& m) {
  Tensor out({m.cols()});
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row_span(r);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c];
  }
  return out;
}

void add_row_vector(Tensor& m, const Tensor& bias) {
  if (bias.rank() != 1 || bias.size() != m.cols())
    throw ShapeError("add_row_vector: bias " + bias.shape_str() +
                     " does not match matrix " + m.shape_str());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row_span(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

double squared_distance(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("squared_distance: shape mismatch " + a.shape_str() +
                     " vs " + b.shape_str());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace fedhkd
