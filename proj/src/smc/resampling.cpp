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


#include "dvsmc/smc/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dvsmc/autodiff/ops.hpp"

namespace dvsmc::smc {

using ad::Tensor;

std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u) {
  const std::size_t n = weights.size();
  if (n == 0) throw std::invalid_argument("systematic_indices: empty weights");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0) || !std::isfinite(total)) throw std::domain_error("systematic_indices: weights do not sum to > 0");
  std::vector<std::size_t> out(n);
  std::size_t i = 0;
  double cum = weights[0];
  for (std::size_t k = 0; k < n; ++k) {
    const double pos = (u + static_cast<double>(k) / static_cast<double>(n)) * total;
    while (pos >= cum && i + 1 < n) cum += weights[++i];
    while (weights[i] <= 0.0 && i > 0) --i;  // rounding past the last positive weight
    out[k] = i;
  }
  return out;
}

std::vector<std::size_t> systematic_indices(std::span<const double> weights, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0 / static_cast<double>(weights.size()));
  return systematic_indices(weights, u(rng));
}

Ensemble systematic_resample(const Ensemble& ensemble, Rng& rng) {
  const auto norm = normalize_and_ess(ensemble.log_weights.data());
  const auto idx = systematic_indices(norm.weights, rng);
  return Ensemble::uniform(ad::gather(ensemble.particles, 0, idx));
}

TransportPlan sinkhorn(const Tensor& particles, const Tensor& log_weights, const SinkhornConfig& config) {
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be positive");
  if (config.max_iterations < 1) throw std::invalid_argument("sinkhorn: need at least one iteration");
  if (particles.rank() != 2 || log_weights.rank() != 1 || log_weights.dim(0) != particles.dim(0)) {
    throw ad::ShapeError("sinkhorn: expected particles [N, d] and log-weights [N]");
  }
  const std::size_t n = particles.dim(0), d = particles.dim(1);
  const double eps = config.epsilon;
  const double log_b = -std::log(static_cast<double>(n));

  Tensor cost = ad::sum(ad::square(ad::reshape(particles, {n, 1, d}) - ad::reshape(particles, {1, n, d})), 2);
  const Tensor scale = ad::mean(cost);
  if (scale.item() > 0.0) cost = cost / scale;
  const Tensor neg_cost = cost * (-1.0 / eps);
  const Tensor log_a = log_weights - ad::logsumexp(log_weights);
  const Tensor log_a_col = ad::reshape(log_a, {n, 1});

  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = std::exp(log_a[i]);

  TransportPlan out;
  Tensor g = Tensor::zeros({1, n});
  Tensor log_plan;
  for (int it = 1; it <= config.max_iterations; ++it) {
    // f_i = -eps LSE_j(log b + (g_j - C_ij) / eps), then g from the column constraint.
    const Tensor f = -eps * ad::logsumexp(neg_cost + g * (1.0 / eps), 1, true) - eps * log_b;
    g = -eps * ad::logsumexp(neg_cost + f * (1.0 / eps) + log_a_col, 0, true);
    log_plan = log_a_col + log_b + (f + g) * (1.0 / eps) + neg_cost;
    // Columns hold exactly after the g update; check the rows.
    const auto lp = log_plan.data();
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += std::exp(lp[i * n + j]);
      err = std::max(err, std::abs(row - a[i]));
    }
    out.iterations = it;
    out.marginal_error = err;
    if (err <= config.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.plan = ad::exp(log_plan);
  return out;
}

OtResult ot_resample(const Ensemble& ensemble, const SinkhornConfig& config) {
  TransportPlan t = sinkhorn(ensemble.particles, ensemble.log_weights, config);
  const double n = static_cast<double>(ensemble.size());
  Tensor moved = ad::matmul(ad::transpose(t.plan), ensemble.particles) * n;
  return {Ensemble::uniform(std::move(moved)), std::move(t)};
}

}  // namespace dvsmc::smc
