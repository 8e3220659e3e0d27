// Copyright 2026 The dvsmc Authors.
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


#include "dvsmc/smc/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dvsmc/autodiff/ops.hpp"

namespace dvsmc::smc {

using ad::Tensor;

FilterConfig FilterConfig::with_particles(std::size_t n, Resampler resampler) {
  FilterConfig c;
  c.particles = n;
  c.ess_threshold = std::max(1.0, static_cast<double>(n) / 2.0);
  c.resampler = resampler;
  return c;
}

void FilterConfig::validate() const {
  if (particles < 1) throw std::invalid_argument("FilterConfig: need at least one particle");
  if (!(ess_threshold >= 1.0 && ess_threshold <= static_cast<double>(particles))) {
    throw std::invalid_argument("FilterConfig: resample threshold must lie in [1, N]");
  }
  if (!(sinkhorn.epsilon > 0.0)) throw std::invalid_argument("FilterConfig: Sinkhorn epsilon must be positive");
}

StepResult filter_step(const Ensemble& ensemble, const StepModel& model, std::size_t t, const FilterConfig& config,
                       Rng& rng) {
  const std::size_t n = ensemble.size();
  Tensor proposed, log_weights;
  if (model.proposal) {
    const dist::GmmParams q = model.proposal(ensemble.particles, t);
    proposed = dist::gmm_sample(q, rng).values;
    const Tensor log_q = dist::gmm_log_pdf(q, proposed);
    const Tensor log_p = dist::gmm_log_pdf(model.transition(ensemble.particles, t), proposed);
    log_weights = weight_update(ensemble.log_weights, model.log_likelihood(proposed, t), log_p, log_q);
  } else {
    proposed = dist::gmm_sample(model.transition(ensemble.particles, t), rng).values;
    const Tensor zero = Tensor::zeros({n});
    log_weights = weight_update(ensemble.log_weights, model.log_likelihood(proposed, t), zero, zero);
  }

  StepResult out;
  const Normalized norm = normalize_and_ess(log_weights.data());
  const Tensor lse = ad::logsumexp(log_weights);
  const double log_n = std::log(static_cast<double>(n));
  out.increment = lse - log_n;
  out.weighted = {proposed, log_weights - lse + log_n};
  out.weights = norm.weights;
  out.ess = norm.ess;
  out.ensemble = out.weighted;
  if (norm.ess < config.ess_threshold) {
    out.resampled = true;
    if (config.resampler == Resampler::kOptimalTransport) {
      OtResult ot = ot_resample(out.weighted, config.sinkhorn);
      out.ensemble = std::move(ot.ensemble);
      out.transport_converged = ot.transport.converged;
    } else {
      out.ensemble = Ensemble::uniform(ad::gather(proposed, 0, systematic_indices(norm.weights, rng)));
    }
  }
  return out;
}

std::vector<double> FilterTrace::posterior_mean(std::size_t t) const {
  std::vector<double> m(dim, 0.0);
  for (std::size_t i = 0; i < particles; ++i) {
    for (std::size_t j = 0; j < dim; ++j) m[j] += weights[t][i] * states[t][i * dim + j];
  }
  return m;
}

FilterRun run_filter(std::size_t steps, const StepModel& model, const FilterConfig& config, const Ensemble& init,
                     Rng& rng) {
  config.validate();
  if (steps < 1) throw std::invalid_argument("run_filter: need at least one step");
  if (init.size() != config.particles) {
    throw std::invalid_argument("run_filter: initial ensemble has " + std::to_string(init.size()) +
                                " particles, config expects " + std::to_string(config.particles));
  }
  FilterRun run;
  FilterTrace& tr = run.trace;
  tr.particles = init.size();
  tr.dim = init.dim();
  Ensemble current = init;
  std::vector<Tensor> increments;
  double cumulative = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    StepResult step = filter_step(current, model, t, config, rng);
    const auto z = step.weighted.particles.data();
    tr.states.emplace_back(z.begin(), z.end());
    tr.weights.push_back(std::move(step.weights));
    tr.increments.push_back(step.increment.item());
    cumulative += step.increment.item();
    tr.cumulative.push_back(cumulative);
    tr.ess.push_back(step.ess);
    tr.resampled.push_back(step.resampled);
    tr.transport_converged.push_back(step.transport_converged);
    increments.push_back(ad::reshape(step.increment, {1}));
    current = std::move(step.ensemble);
  }
  run.log_evidence = ad::sum(ad::concat(increments, 0));
  return run;
}

namespace {

template <class Row>
Tensor stack(const std::vector<Row>& rows, ad::Shape shape) {
  std::vector<double> v;
  v.reserve(ad::numel(shape));
  for (const auto& r : rows) v.insert(v.end(), r.begin(), r.end());
  return Tensor(std::move(shape), std::move(v));
}

std::vector<double> flags(const std::vector<bool>& b) { return {b.begin(), b.end()}; }

}  // namespace

io::Archive trace_to_archive(const FilterTrace& trace, const nlohmann::json& meta) {
  const std::size_t t = trace.length();
  io::Archive a;
  a.kind = "trace";
  a.meta = meta;
  a.meta["steps"] = t;
  a.meta["particles"] = trace.particles;
  a.meta["dim"] = trace.dim;
  a.put("states", stack(trace.states, {t, trace.particles, trace.dim}));
  a.put("weights", stack(trace.weights, {t, trace.particles}));
  a.put("increments", Tensor({t}, trace.increments));
  a.put("cumulative", Tensor({t}, trace.cumulative));
  a.put("ess", Tensor({t}, trace.ess));
  a.put("resampled", Tensor({t}, flags(trace.resampled)));
  a.put("transport_converged", Tensor({t}, flags(trace.transport_converged)));
  return a;
}

FilterTrace trace_from_archive(const io::Archive& a) {
  if (a.kind != "trace") throw io::FormatError("expected a trace archive, got '" + a.kind + "'");
  FilterTrace tr;
  const std::size_t t = a.meta.at("steps").get<std::size_t>();
  tr.particles = a.meta.at("particles").get<std::size_t>();
  tr.dim = a.meta.at("dim").get<std::size_t>();
  const auto states = a.get("states").data();
  const auto weights = a.get("weights").data();
  const std::size_t nd = tr.particles * tr.dim;
  for (std::size_t s = 0; s < t; ++s) {
    tr.states.emplace_back(states.begin() + static_cast<long>(s * nd), states.begin() + static_cast<long>((s + 1) * nd));
    tr.weights.emplace_back(weights.begin() + static_cast<long>(s * tr.particles),
                            weights.begin() + static_cast<long>((s + 1) * tr.particles));
  }
  auto vec = [&](const char* name) {
    const auto d = a.get(name).data();
    return std::vector<double>(d.begin(), d.end());
  };
  tr.increments = vec("increments");
  tr.cumulative = vec("cumulative");
  tr.ess = vec("ess");
  for (double v : vec("resampled")) tr.resampled.push_back(v != 0.0);
  for (double v : vec("transport_converged")) tr.transport_converged.push_back(v != 0.0);
  return tr;
}

void save_trace(const FilterTrace& trace, const std::filesystem::path& path, const nlohmann::json& meta) {
  trace_to_archive(trace, meta).save(path);
}

FilterTrace load_trace(const std::filesystem::path& path) { return trace_from_archive(io::Archive::load(path)); }

}  // namespace dvsmc::smc
