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

#include <algorithm>
#include <cstdint>

#include "lmd/error.hpp"
#include "lmd/tensor.hpp"
#include "tensor_internal.hpp"

namespace lmd {

namespace detail {

void check_conv_shapes(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 3) throw ShapeError("conv2d: input must be [C,H,W], got " + shape_string(x.shape()));
  if (w.rank() != 4) throw ShapeError("conv2d: weight must be [Co,Ci,kH,kW], got " + shape_string(w.shape()));
  if (w.extent(1) != x.extent(0)) {
    throw ShapeError("conv2d: weight expects " + std::to_string(w.extent(1)) +
                     " input channels, input has " + std::to_string(x.extent(0)));
  }
  if (!b.empty() && (b.rank() != 1 || b.extent(0) != w.extent(0))) {
    throw ShapeError("conv2d: bias must be [" + std::to_string(w.extent(0)) + "], got " +
                     shape_string(b.shape()));
  }
}

ReductionPlan plan_reduction(const Shape& shape, const std::vector<std::size_t>& axes) {
  std::vector<bool> reduce(shape.size(), false);
  for (auto ax : axes) {
    if (ax >= shape.size()) throw ShapeError("moments: axis " + std::to_string(ax) + " out of range");
    reduce[ax] = true;
  }
  std::vector<std::size_t> stride(shape.size(), 1);
  for (std::size_t d = shape.size(); d-- > 1;) stride[d - 1] = stride[d] * shape[d];

  ReductionPlan plan;
  // Row-major enumeration of the selected axes keeps offsets ascending.
  auto enumerate = [&](bool pick) {
    std::vector<std::size_t> offsets{0};
    for (std::size_t d = 0; d < shape.size(); ++d) {
      if (reduce[d] != pick) continue;
      std::vector<std::size_t> next;
      next.reserve(offsets.size() * shape[d]);
      for (auto base : offsets)
        for (std::size_t i = 0; i < shape[d]; ++i) next.push_back(base + i * stride[d]);
      offsets = std::move(next);
    }
    return offsets;
  };
  plan.reduced_offsets = enumerate(true);
  plan.group_base = enumerate(false);
  for (std::size_t d = 0; d < shape.size(); ++d)
    if (!reduce[d]) plan.result_shape.push_back(shape[d]);
  if (plan.result_shape.empty()) plan.result_shape = {1};
  if (plan.reduced_offsets.empty() || axes.empty()) throw ShapeError("moments: empty reduction");
  return plan;
}

}  // namespace detail

namespace reference {

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " * " +
                     shape_string(b.shape()));
  }
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      out[i * n + j] = acc;
    }
  }
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dParams& p) {
  detail::check_conv_shapes(x, w, b);
  const std::size_t cin = x.extent(0), h = x.extent(1), wd = x.extent(2);
  const std::size_t cout = w.extent(0), kh = w.extent(2), kw = w.extent(3);
  const std::size_t oh = conv_output_extent(h, kh, p);
  const std::size_t ow = conv_output_extent(wd, kw, p);
  Tensor out({cout, oh, ow});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t ky = 0; ky < kh; ++ky) {
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const auto iy = static_cast<std::int64_t>(oy * p.stride + ky) - static_cast<std::int64_t>(p.padding);
              const auto ix = static_cast<std::int64_t>(ox * p.stride + kx) - static_cast<std::int64_t>(p.padding);
              if (iy < 0 || ix < 0 || iy >= static_cast<std::int64_t>(h) || ix >= static_cast<std::int64_t>(wd)) continue;
              acc += w[((o * cin + ci) * kh + ky) * kw + kx] * x[(ci * h + iy) * wd + ix];
            }
          }
        }
        if (!b.empty()) acc += b[o];
        out[(o * oh + oy) * ow + ox] = acc;
      }
    }
  }
  return out;
}

Moments moments(const Tensor& a, const std::vector<std::size_t>& axes) {
  const detail::ReductionPlan plan = detail::plan_reduction(a.shape(), axes);
  const std::size_t count = plan.reduced_offsets.size();
  Tensor mean(plan.result_shape), var(plan.result_shape);
  for (std::size_t g = 0; g < plan.group_base.size(); ++g) {
    double s = 0.0;
    for (auto off : plan.reduced_offsets) s += a[plan.group_base[g] + off];
    mean[g] = s / static_cast<double>(count);
    double q = 0.0;
    for (auto off : plan.reduced_offsets) {
      const double d = a[plan.group_base[g] + off] - mean[g];
      q += d * d;
    }
    var[g] = q / static_cast<double>(count);
  }
  return {std::move(mean), std::move(var)};
}

}  // namespace reference

}  // namespace lmd
