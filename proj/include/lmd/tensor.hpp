// Copyright 2026 The LMD Authors.
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

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lmd {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. Value type; operations below never
/// mutate their arguments.
class Tensor {
 public:
  /// The empty tensor: shape {0}, no elements.
  Tensor() : shape_{0} {}

  /// Zero-filled tensor of the given shape.
  explicit Tensor(Shape shape);

  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);
  /// Rank-1 tensor holding `values`.
  static Tensor vector(std::initializer_list<double> values);
  /// Rank-2 tensor from nested rows; all rows must have equal length.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  bool empty() const { return data_.empty(); }

  std::span<const double> data() const { return data_; }
  std::span<double> mutable_data() { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  /// Same data under a new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  /// Exact elementwise equality (shape and every value).
  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Elementwise arithmetic. Shapes must match exactly; there is no broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
/// a += b in place; used by accumulators that own their buffer.
void add_inplace(Tensor& a, const Tensor& b);

/// [m x k] * [k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose2d(const Tensor& a);

struct Conv2dParams {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Output spatial extent of a convolution; throws ShapeError when the
/// kernel does not tile the padded input.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, const Conv2dParams& p);

/// Cross-correlation of x [C_in,H,W] with w [C_out,C_in,kH,kW] plus the
/// per-channel bias b [C_out] (pass an empty tensor for no bias).
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dParams& p);

/// Unfolds x [C_in,H,W] into columns [C_in*kH*kW, H'*W'].
Tensor im2col(const Tensor& x, std::size_t kh, std::size_t kw, const Conv2dParams& p);

/// Parts laid out contiguously along `axis`. Empty parts are skipped.
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

struct Moments {
  Tensor mean;
  Tensor variance;
};

/// Population mean and variance over `axes`. The result has the shape of
/// the remaining axes, or {1} when every axis is reduced.
Moments moments(const Tensor& a, const std::vector<std::size_t>& axes);

double max_abs(const Tensor& a);
bool all_finite(const Tensor& a);

namespace reference {

// Serial textbook kernels. They follow the same accumulation order as the
// parallel kernels, so results are expected to match bit for bit.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dParams& p);
Moments moments(const Tensor& a, const std::vector<std::size_t>& axes);

}  // namespace reference

}  // namespace lmd
