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

#include "lmd/heatmap.hpp"

#include <algorithm>
#include <cstdlib>
#include <cmath>
#include <cstdio>

#include "lmd/error.hpp"

namespace lmd {

HeatmapEncoding parse_heatmap_encoding(std::string_view s) {
  if (s == "signed-csv") return HeatmapEncoding::kSignedCsv;
  if (s == "positive-pgm") return HeatmapEncoding::kPositivePgm;
  throw ConfigError("unknown heatmap encoding '" + std::string(s) + "'");
}

HeatmapNorm parse_heatmap_norm(std::string_view s) {
  if (s == "max-positive") return HeatmapNorm::kMaxPositive;
  if (s == "signed-symmetric") return HeatmapNorm::kSignedSymmetric;
  if (s == "sigmoid") return HeatmapNorm::kSigmoid;
  throw ConfigError("unknown heatmap normalization '" + std::string(s) + "'");
}

std::string_view to_string(HeatmapEncoding e) {
  return e == HeatmapEncoding::kSignedCsv ? "signed-csv" : "positive-pgm";
}

std::string_view to_string(HeatmapNorm n) {
  switch (n) {
    case HeatmapNorm::kMaxPositive:
      return "max-positive";
    case HeatmapNorm::kSignedSymmetric:
      return "signed-symmetric";
    case HeatmapNorm::kSigmoid:
      return "sigmoid";
  }
  return "?";
}

Tensor as_map2d(const Tensor& t) {
  if (t.empty()) throw ShapeError("cannot draw an empty tensor");
  if (t.rank() == 1) return t.reshaped({1, t.numel()});
  if (t.rank() == 2) return t;
  const std::size_t cols = t.shape().back();
  return t.reshaped({t.numel() / cols, cols});
}

std::vector<std::uint8_t> normalize_to_bytes(const Tensor& map, HeatmapNorm norm) {
  std::vector<std::uint8_t> out(map.numel(), 0);
  const auto to_byte = [](double unit) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * unit), 0L, 255L));
  };
  switch (norm) {
    case HeatmapNorm::kMaxPositive: {
      double top = 0.0;
      for (double v : map.data()) top = std::max(top, v);
      if (top > 0.0)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_byte(std::max(map[i], 0.0) / top);
      break;
    }
    case HeatmapNorm::kSignedSymmetric: {
      const double top = max_abs(map);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_byte(top > 0.0 ? 0.5 + 0.5 * map[i] / top : 0.5);
      break;
    }
    case HeatmapNorm::kSigmoid:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_byte(1.0 / (1.0 + std::exp(-map[i])));
      break;
  }
  return out;
}

std::string to_pgm(const Tensor& map2d, HeatmapNorm norm) {
  if (map2d.rank() != 2) throw ShapeError("PGM export needs a 2D map, got " + shape_string(map2d.shape()));
  const auto bytes = normalize_to_bytes(map2d, norm);
  std::string out = "P5\n" + std::to_string(map2d.extent(1)) + " " + std::to_string(map2d.extent(0)) + "\n255\n";
  out.append(bytes.begin(), bytes.end());
  return out;
}

std::string to_csv(const Tensor& map2d) {
  if (map2d.rank() != 2) throw ShapeError("CSV export needs a 2D map, got " + shape_string(map2d.shape()));
  std::string out;
  char buf[32];
  const std::size_t rows = map2d.extent(0), cols = map2d.extent(1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", map2d[r * cols + c]);
      if (c) out += ',';
      out += buf;
    }
    out += "\r\n";
  }
  return out;
}

Tensor parse_csv(std::string_view text) {
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::size_t count = 0, start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string field(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      char* stop = nullptr;
      const double v = std::strtod(field.c_str(), &stop);
      if (field.empty() || stop != field.c_str() + field.size()) throw ParseError("bad CSV field '" + field + "'");
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw ParseError("ragged CSV row " + std::to_string(rows + 1));
    ++rows;
  }
  if (rows == 0) throw ParseError("empty CSV");
  return Tensor({rows, cols}, std::move(values));
}

}  // namespace lmd
