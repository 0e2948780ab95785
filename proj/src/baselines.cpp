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

#include "lmd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "lmd/error.hpp"
#include "lmd/parallel.hpp"

namespace lmd {

namespace {

void guard(const ModelGraph& model) {
  if (model.modalities() > kMaxShapleyModalities) {
    throw ConfigError("exact Shapley enumeration is limited to " + std::to_string(kMaxShapleyModalities) +
                      " modalities, model has " + std::to_string(model.modalities()));
  }
}

ModalityInputs restrict_to(const ModalityInputs& inputs, std::size_t mask) {
  ModalityInputs out = inputs;
  for (std::size_t m = 0; m < out.size(); ++m)
    if (!(mask >> m & 1U)) out[m] = Tensor::zeros(out[m].shape());
  return out;
}

// Evaluates value(mask) for every coalition; independent, so run in
// parallel into fixed slots.
template <typename F>
std::vector<Tensor> coalition_values(std::size_t modalities, F value) {
  const std::size_t count = std::size_t{1} << modalities;
  std::vector<Tensor> v(count);
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
  for (std::size_t mask = 0; mask < count; ++mask) {
    try {
      v[mask] = value(mask);
    } catch (...) {
      errors[mask] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return v;
}

// phi_m = sum over S without m of |S|!(M-|S|-1)!/M! (v(S+m) - v(S)).
// Per entry the terms are summed in sorted order, so relabelling the
// modalities permutes phi exactly.
std::vector<Tensor> shapley_values(const std::vector<Tensor>& v, std::size_t modalities) {
  std::vector<double> fact(modalities + 1, 1.0);
  for (std::size_t i = 1; i <= modalities; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  const std::size_t numel = v.front().numel();
  std::vector<Tensor> phi;
  std::vector<double> terms;
  for (std::size_t m = 0; m < modalities; ++m) {
    std::vector<std::size_t> masks;
    std::vector<double> weights;
    for (std::size_t mask = 0; mask < v.size(); ++mask) {
      if (mask >> m & 1U) continue;
      const std::size_t size = static_cast<std::size_t>(__builtin_popcountll(mask));
      masks.push_back(mask);
      weights.push_back(fact[size] * fact[modalities - size - 1] / fact[modalities]);
    }
    Tensor acc = Tensor::zeros(v.front().shape());
    for (std::size_t j = 0; j < numel; ++j) {
      terms.clear();
      for (std::size_t t = 0; t < masks.size(); ++t)
        terms.push_back(weights[t] * (v[masks[t] | (std::size_t{1} << m)][j] - v[masks[t]][j]));
      std::sort(terms.begin(), terms.end());
      double sum = 0.0;
      for (double x : terms) sum += x;
      acc[j] = sum;
    }
    phi.push_back(std::move(acc));
  }
  return phi;
}

void finish(Attribution& a) {
  Tensor total = a.base;
  for (const auto& p : a.per_modality) add_inplace(total, p);
  a.efficiency_residual = max_abs(sub(total, a.full)) / (1.0 + max_abs(a.full));
}

}  // namespace

std::string_view to_string(Redistribution r) {
  return r == Redistribution::kShapley ? "shapley" : "proportional";
}

Attribution shapley(const ModelGraph& model, const ModalityInputs& inputs) {
  guard(model);
  check_inputs(model, inputs);
  const std::size_t out = model.output_index();
  const std::vector<Tensor> v = coalition_values(
      model.modalities(), [&](std::size_t mask) { return forward(model, restrict_to(inputs, mask))[out]; });
  Attribution a;
  a.per_modality = shapley_values(v, model.modalities());
  a.base = v.front();
  a.full = v.back();
  a.coalition_evaluations = v.size();
  finish(a);
  return a;
}

Attribution lmd_shap(const ModelGraph& model, const ModalityInputs& inputs, const SplitConfig& cfg,
                     Redistribution how) {
  return lmd_shap(model, record(model, inputs, cfg.epsilon), inputs, cfg, how);
}

Attribution lmd_shap(const ModelGraph& model, const RecordedState& state, const ModalityInputs& inputs,
                     const SplitConfig& cfg, Redistribution how) {
  guard(model);
  const std::size_t modalities = model.modalities();
  const std::size_t out = model.output_index();
  const DecomposedTensor comps = propagate(model, state, inputs, cfg)[out];

  Attribution a;
  a.full = comps.sum();
  if (max_abs(comps.bias()) == 0.0) {
    // Nothing to redistribute.
    for (std::size_t m = 0; m < modalities; ++m) a.per_modality.push_back(comps.slot(m));
    a.coalition_evaluations = 1;
  } else if (how == Redistribution::kProportional) {
    const Tensor& hb = comps.bias();
    for (std::size_t m = 0; m < modalities; ++m) a.per_modality.push_back(comps.slot(m));
    for (std::size_t j = 0; j < hb.numel(); ++j) {
      double mass = 0.0;
      for (std::size_t m = 0; m < modalities; ++m) mass += std::fabs(comps.slot(m)[j]);
      for (std::size_t m = 0; m < modalities; ++m) {
        const double share = mass > 0.0 ? std::fabs(comps.slot(m)[j]) / mass : 1.0 / static_cast<double>(modalities);
        a.per_modality[m][j] += share * hb[j];
      }
    }
    a.coalition_evaluations = 1;
  } else {
    // Linearized game: v'(S) sums the modality components of S with the
    // other inputs zeroed; the bias stream only enters v'(full).
    const std::size_t full = (std::size_t{1} << modalities) - 1;
    const std::vector<Tensor> v = coalition_values(modalities, [&](std::size_t mask) {
      if (mask == full) return a.full;
      Tensor s = Tensor::zeros(comps.shape());
      if (mask == 0) return s;
      const DecomposedTensor c = propagate(model, state, restrict_to(inputs, mask), cfg)[out];
      for (std::size_t m = 0; m < modalities; ++m)
        if (mask >> m & 1U) add_inplace(s, c.slot(m));
      return s;
    });
    a.per_modality = shapley_values(v, modalities);
    a.coalition_evaluations = v.size();
  }
  // Whatever the shares leave over.
  a.base = a.full;
  for (const auto& p : a.per_modality) a.base = sub(a.base, p);
  finish(a);
  return a;
}

SeparationReport shapley_protocol(const ModelGraph& model, const SampleSet& samples, const MetricConfig& mcfg) {
  guard(model);
  return replacement_protocol(samples, model.modalities(), mcfg, "shapley",
                              [&](const ModalityInputs& in, std::size_t) { return shapley(model, in).per_modality; });
}

SeparationReport lmd_shap_protocol(const ModelGraph& model, const SampleSet& samples, const SplitConfig& cfg,
                                   const MetricConfig& mcfg, Redistribution how) {
  guard(model);
  cfg.validate(model.modalities());
  const std::size_t anchors = mcfg.sample_limit == 0 ? samples.size() : std::min(mcfg.sample_limit, samples.size());
  const std::vector<RecordedState> states = record_samples(model, samples, anchors, cfg.epsilon);
  return replacement_protocol(samples, model.modalities(), mcfg,
                              "lmd+shap:" + cfg.name() + ":" + std::string(to_string(how)),
                              [&](const ModalityInputs& in, std::size_t k) {
                                return lmd_shap(model, states[k], in, cfg, how).per_modality;
                              });
}

}  // namespace lmd
