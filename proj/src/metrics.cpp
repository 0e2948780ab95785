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

#include "lmd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <memory>
#include <set>

#include "lmd/error.hpp"
#include "lmd/parallel.hpp"

namespace lmd {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

Tensor positive_part(const Tensor& t) {
  Tensor out = t;
  for (auto& v : out.mutable_data()) v = std::max(v, 0.0);
  return out;
}

struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

// Population statistics, summed in the order given.
Stats population(const std::vector<double>& v) {
  if (v.empty()) return {};
  double s = 0.0;
  for (double x : v) s += x;
  const double mean = s / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

}  // namespace

PearsonResult pearson(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "pearson");
  const std::size_t n = a.numel();
  if (n < 2) throw ShapeError("pearson needs at least two elements");
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return {0.0, true};
  // sqrt(saa * sbb) rather than sqrt(saa) * sqrt(sbb): identical inputs then
  // give exactly 1.
  const double r = sab / std::sqrt(saa * sbb);
  return {std::clamp(r, -1.0, 1.0), false};
}

double mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  if (a.numel() == 0) throw ShapeError("mse of empty tensors");
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.numel());
}

MetricConfig MetricConfig::defaults_for(std::size_t n) {
  MetricConfig c;
  if (n < 2) {
    c.offset_count = 1;
    return c;
  }
  c.offset_stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * 500.0 / 6019.0)));
  // Largest K <= 12 whose offsets land on distinct samples other than the anchor.
  std::set<std::size_t> seen;
  std::size_t k = 0;
  while (k < 12) {
    const std::size_t o = (c.offset_stride * (k + 1)) % n;
    if (o == 0 || !seen.insert(o).second) break;
    ++k;
  }
  if (k == 0) {
    c.offset_stride = 1;
    k = std::min<std::size_t>(12, n - 1);
  }
  c.offset_count = k;
  return c;
}

std::vector<std::size_t> MetricConfig::offsets() const {
  if (!explicit_offsets.empty()) return explicit_offsets;
  std::vector<std::size_t> out;
  for (std::size_t m = 1; m <= offset_count; ++m) out.push_back(offset_stride * m);
  return out;
}

void MetricConfig::validate(std::size_t n, std::size_t modalities) const {
  if (n < 2) throw ConfigError("the replacement protocol needs at least 2 samples, got " + std::to_string(n));
  if (explicit_offsets.empty()) {
    if (offset_stride == 0) throw ConfigError("offset stride must be positive");
    if (offset_count == 0) throw ConfigError("offset count must be positive");
  }
  std::set<std::size_t> seen;
  for (std::size_t o : offsets()) {
    const std::size_t r = o % n;
    if (r == 0 && explicit_offsets.empty()) {
      throw ConfigError("offset " + std::to_string(o) + " wraps onto the anchor sample (N = " + std::to_string(n) + ")");
    }
    if (!seen.insert(r).second) {
      throw ConfigError("offsets collide modulo N = " + std::to_string(n) + " (offset " + std::to_string(o) + ")");
    }
  }
  if (sample_limit > n) throw ConfigError("sample limit exceeds the sample count");
  for (const auto& set : perturb_sets) {
    if (set.empty()) throw ConfigError("empty perturbation set");
    std::set<std::size_t> uniq(set.begin(), set.end());
    if (uniq.size() != set.size()) throw ConfigError("perturbation set repeats a modality");
    for (auto m : set)
      if (m >= modalities) throw ConfigError("perturbed modality " + std::to_string(m) + " out of range");
  }
}

std::vector<std::vector<std::size_t>> all_pairs(std::size_t modalities) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t a = 0; a < modalities; ++a)
    for (std::size_t b = a + 1; b < modalities; ++b) out.push_back({a, b});
  return out;
}

std::string cell_label(const std::vector<std::size_t>& perturbed, std::size_t observed) {
  std::vector<std::size_t> sorted = perturbed;
  std::sort(sorted.begin(), sorted.end());
  std::string s;
  for (auto m : sorted) s += modality_label(ModalityId::modality(m)) + "_p";
  return s + "/" + modality_label(ModalityId::modality(observed));
}

const SeparationCell& SeparationReport::cell(const std::vector<std::size_t>& perturbed, std::size_t observed) const {
  const std::string want = cell_label(perturbed, observed);
  for (const auto& c : cells)
    if (c.label == want) return c;
  throw ConfigError("report has no cell " + want);
}

SeparationReport replacement_protocol(const SampleSet& samples, std::size_t modalities, const MetricConfig& mcfg,
                                      const std::string& variant, const AttributionFn& attribute) {
  const std::size_t n = samples.size();
  mcfg.validate(n, modalities);
  std::vector<std::vector<std::size_t>> sets = mcfg.perturb_sets;
  if (sets.empty())
    for (std::size_t m = 0; m < modalities; ++m) sets.push_back({m});
  std::vector<std::size_t> offsets = mcfg.offsets();
  std::sort(offsets.begin(), offsets.end());
  const std::size_t anchors = mcfg.sample_limit == 0 ? n : mcfg.sample_limit;

  // scores[k][set][offset][observed] = {pcc, degenerate, mse}
  struct Score {
    double pcc;
    bool degenerate;
    double mse;
  };
  const std::size_t per_anchor = sets.size() * offsets.size() * modalities;
  std::vector<Score> scores(anchors * per_anchor);
  std::vector<std::exception_ptr> errors(anchors);

  const auto score_maps = [&](const Tensor& pert, const Tensor& clean) {
    const Tensor a = mcfg.positive_part ? positive_part(pert) : pert;
    const Tensor b = mcfg.positive_part ? positive_part(clean) : clean;
    const PearsonResult p = pearson(a, b);
    return Score{p.value, p.degenerate, mse(pert, clean)};
  };

#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
  for (std::size_t k = 0; k < anchors; ++k) {
    try {
      const ModalityInputs& clean_in = samples.samples[k];
      const std::vector<Tensor> clean = attribute(clean_in, k);
      if (clean.size() != modalities) throw ConfigError("attribution returned the wrong number of maps");
      std::size_t at = k * per_anchor;
      for (const auto& set : sets) {
        for (std::size_t o : offsets) {
          ModalityInputs in = clean_in;
          const std::size_t donor = (k + o) % n;
          for (auto m : set) in[m] = samples.samples[donor][m];
          const std::vector<Tensor> pert = attribute(in, k);
          for (std::size_t obs = 0; obs < modalities; ++obs) scores[at++] = score_maps(pert[obs], clean[obs]);
        }
      }
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  SeparationReport report;
  report.variant = variant;
  report.anchors = anchors;
  report.offsets = offsets;
  for (std::size_t si = 0; si < sets.size(); ++si) {
    for (std::size_t obs = 0; obs < modalities; ++obs) {
      std::vector<double> pcc, err;
      std::size_t degenerate = 0;
      for (std::size_t k = 0; k < anchors; ++k) {
        for (std::size_t oi = 0; oi < offsets.size(); ++oi) {
          const Score& s = scores[k * per_anchor + (si * offsets.size() + oi) * modalities + obs];
          err.push_back(s.mse);
          if (s.degenerate) {
            ++degenerate;
          } else {
            pcc.push_back(s.pcc);
          }
        }
      }
      SeparationCell cell;
      cell.perturbed = sets[si];
      std::sort(cell.perturbed.begin(), cell.perturbed.end());
      cell.observed = obs;
      cell.label = cell_label(cell.perturbed, obs);
      const Stats p = population(pcc);
      const Stats m = population(err);
      cell.pcc_mean = p.mean;
      cell.pcc_std = p.std;
      cell.mse_mean = m.mean;
      cell.mse_std = m.std;
      cell.n = err.size();
      cell.n_degenerate = degenerate;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::vector<RecordedState> record_samples(const ModelGraph& model, const SampleSet& samples, std::size_t anchors,
                                          double epsilon) {
  if (anchors > samples.size()) throw ConfigError("more anchors than samples");
  std::vector<std::unique_ptr<RecordedState>> slots(anchors);
  std::vector<std::exception_ptr> errors(anchors);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
  for (std::size_t k = 0; k < anchors; ++k) {
    try {
      slots[k] = std::make_unique<RecordedState>(record(model, samples.samples[k], epsilon));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<RecordedState> out;
  out.reserve(anchors);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

SeparationReport perturbation_protocol(const ModelGraph& model, const SampleSet& samples, const SplitConfig& cfg,
                                       const MetricConfig& mcfg) {
  cfg.validate(model.modalities());
  if (samples.modalities != model.modalities()) throw ConfigError("sample set modality count does not match the model");
  const std::size_t anchors = mcfg.sample_limit == 0 ? samples.size() : std::min(mcfg.sample_limit, samples.size());
  const std::vector<RecordedState> states = record_samples(model, samples, anchors, cfg.epsilon);

  const std::size_t out = model.output_index();
  const std::size_t modalities = model.modalities();
  return replacement_protocol(samples, modalities, mcfg, cfg.name(), [&](const ModalityInputs& in, std::size_t k) {
    const DecomposedTensor final = propagate(model, states[k], in, cfg)[out];
    std::vector<Tensor> maps;
    for (std::size_t m = 0; m < modalities; ++m) maps.push_back(final.slot(m));
    return maps;
  });
}

std::vector<SeparationReport> variant_matrix(const ModelGraph& model, const SampleSet& samples,
                                             const std::vector<SplitConfig>& variants, const MetricConfig& mcfg) {
  if (variants.empty()) throw ConfigError("variant list is empty");
  std::vector<SeparationReport> out;
  for (const auto& v : variants) out.push_back(perturbation_protocol(model, samples, v, mcfg));
  return out;
}

namespace {

std::string pm(const char* fmt, double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, mean, std);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

}  // namespace

std::string format_table(const std::vector<SeparationReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    std::size_t w = 4;
    for (const auto& c : r.cells) w = std::max(w, c.label.size());
    out += "variant " + r.variant + "  (anchors " + std::to_string(r.anchors) + ", offsets " +
           std::to_string(r.offsets.size()) + ")\n";
    out += pad("cell", w + 2) + pad("PCC", 22) + pad("MSE", 26) + pad("n", 8) + "degenerate\n";
    for (const auto& c : r.cells) {
      out += pad(c.label, w + 2) + pad(pm("%.4f +- %.4f", c.pcc_mean, c.pcc_std), 22) +
             pad(pm("%.3e +- %.3e", c.mse_mean, c.mse_std), 26) +
             pad(std::to_string(c.n), 8) + std::to_string(c.n_degenerate) + "\n";
    }
    out += "\n";
  }
  return out;
}

}  // namespace lmd
