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

#include "lmd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "lmd/error.hpp"
#include "lmd/parallel.hpp"
#include "tensor_internal.hpp"

namespace lmd {

namespace {

// Below this many scalar operations a kernel runs on the calling thread.
constexpr std::size_t kParallelGrain = 1 << 14;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename F>
Tensor elementwise(const Tensor& a, const Tensor& b, const char* op, F f) {
  require_same_shape(a, b, op);
  Tensor out(a.shape());
  const auto x = a.data();
  const auto y = b.data();
  auto z = out.mutable_data();
  const auto n = static_cast<std::int64_t>(z.size());
#pragma omp parallel for if (z.size() > kParallelGrain) num_threads(thread_count())
  for (std::int64_t i = 0; i < n; ++i) z[i] = f(x[i], y[i]);
  return out;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(m * n);
  for (const auto& row : rows) {
    if (row.size() != n) throw ShapeError("matrix rows have unequal length");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({m, n}, std::move(data));
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  const auto x = a.data();
  auto z = out.mutable_data();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = s * x[i];
  return out;
}

void add_inplace(Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add_inplace");
  auto z = a.mutable_data();
  const auto y = b.data();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += y[i];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " * " +
                     shape_string(b.shape()));
  }
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor out({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = out.mutable_data().data();
  const auto rows = static_cast<std::int64_t>(m);
  // Row-parallel i-k-j loop: every output element is owned by one thread and
  // accumulates over k in ascending order, independent of the thread count.
#pragma omp parallel for schedule(static) if (m * n * k > kParallelGrain) num_threads(thread_count())
  for (std::int64_t i = 0; i < rows; ++i) {
    double* crow = pc + i * n;
    const double* arow = pa + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor transpose2d(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose2d: rank " + std::to_string(a.rank()));
  const std::size_t m = a.extent(0), n = a.extent(1);
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  return out;
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, const Conv2dParams& p) {
  if (p.stride == 0) throw ShapeError("conv2d: stride must be positive");
  const std::size_t padded = in + 2 * p.padding;
  if (kernel == 0 || kernel > padded) {
    throw ShapeError("conv2d: kernel extent " + std::to_string(kernel) +
                     " does not fit padded input " + std::to_string(padded));
  }
  if ((padded - kernel) % p.stride != 0) {
    throw ShapeError("conv2d: non-integral output extent for input " + std::to_string(in) +
                     ", kernel " + std::to_string(kernel) + ", stride " +
                     std::to_string(p.stride) + ", padding " + std::to_string(p.padding));
  }
  return (padded - kernel) / p.stride + 1;
}

Tensor im2col(const Tensor& x, std::size_t kh, std::size_t kw, const Conv2dParams& p) {
  if (x.rank() != 3) throw ShapeError("im2col: expected [C,H,W], got " + shape_string(x.shape()));
  const std::size_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
  const std::size_t oh = conv_output_extent(h, kh, p);
  const std::size_t ow = conv_output_extent(w, kw, p);
  Tensor cols({c * kh * kw, oh * ow});
  const double* px = x.data().data();
  double* pc = cols.mutable_data().data();
  const auto rows = static_cast<std::int64_t>(c * kh * kw);
#pragma omp parallel for if (c * kh * kw * oh * ow > kParallelGrain) num_threads(thread_count())
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::size_t ci = r / (kh * kw);
    const std::size_t ky = (r / kw) % kh;
    const std::size_t kx = r % kw;
    double* dst = pc + r * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const auto iy = static_cast<std::int64_t>(oy * p.stride + ky) - static_cast<std::int64_t>(p.padding);
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const auto ix = static_cast<std::int64_t>(ox * p.stride + kx) - static_cast<std::int64_t>(p.padding);
        const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::int64_t>(h) &&
                            ix < static_cast<std::int64_t>(w);
        dst[oy * ow + ox] = inside ? px[(ci * h + iy) * w + ix] : 0.0;
      }
    }
  }
  return cols;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dParams& p) {
  detail::check_conv_shapes(x, w, b);
  const std::size_t cout = w.extent(0), kh = w.extent(2), kw = w.extent(3);
  const std::size_t oh = conv_output_extent(x.extent(1), kh, p);
  const std::size_t ow = conv_output_extent(x.extent(2), kw, p);
  Tensor cols = im2col(x, kh, kw, p);
  Tensor out = matmul(w.reshaped({cout, w.numel() / cout}), cols);
  if (!b.empty()) {
    auto z = out.mutable_data();
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t i = 0; i < oh * ow; ++i) z[o * oh * ow + i] += b[o];
  }
  return out.reshaped({cout, oh, ow});
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  std::vector<const Tensor*> live;
  for (const auto& t : parts)
    if (!t.empty()) live.push_back(&t);
  if (live.empty()) return Tensor();
  const Shape& ref = live.front()->shape();
  if (axis >= ref.size()) throw ShapeError("concat: axis out of range");
  std::size_t total = 0;
  for (const Tensor* t : live) {
    const Shape& s = t->shape();
    if (s.size() != ref.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != ref[d]) {
        throw ShapeError("concat: extent mismatch " + shape_string(s) + " vs " + shape_string(ref));
      }
    }
    total += s[axis];
  }
  Shape out_shape = ref;
  out_shape[axis] = total;
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= ref[d];
  for (std::size_t d = axis + 1; d < ref.size(); ++d) inner *= ref[d];
  std::vector<double> data;
  data.reserve(shape_numel(out_shape));
  for (std::size_t o = 0; o < outer; ++o) {
    for (const Tensor* t : live) {
      const std::size_t chunk = t->extent(axis) * inner;
      const auto src = t->data().subspan(o * chunk, chunk);
      data.insert(data.end(), src.begin(), src.end());
    }
  }
  return Tensor(std::move(out_shape), std::move(data));
}

Moments moments(const Tensor& a, const std::vector<std::size_t>& axes) {
  const detail::ReductionPlan plan = detail::plan_reduction(a.shape(), axes);
  const std::size_t groups = plan.group_base.size();
  const std::size_t count = plan.reduced_offsets.size();
  Tensor mean(plan.result_shape), var(plan.result_shape);
  const double* pa = a.data().data();
  auto pm = mean.mutable_data();
  auto pv = var.mutable_data();
  const auto ng = static_cast<std::int64_t>(groups);
#pragma omp parallel for if (groups * count > kParallelGrain && groups > 1) num_threads(thread_count())
  for (std::int64_t g = 0; g < ng; ++g) {
    const double* base = pa + plan.group_base[g];
    double s = 0.0;
    for (std::size_t r = 0; r < count; ++r) s += base[plan.reduced_offsets[r]];
    const double mu = s / static_cast<double>(count);
    double q = 0.0;
    for (std::size_t r = 0; r < count; ++r) {
      const double d = base[plan.reduced_offsets[r]] - mu;
      q += d * d;
    }
    pm[g] = mu;
    pv[g] = q / static_cast<double>(count);
  }
  return {std::move(mean), std::move(var)};
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::fabs(v));
  return m;
}

bool all_finite(const Tensor& a) {
  return std::all_of(a.data().begin(), a.data().end(), [](double v) { return std::isfinite(v); });
}

}  // namespace lmd
