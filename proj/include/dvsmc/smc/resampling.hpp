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


#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dvsmc/autodiff/tensor.hpp"
#include "dvsmc/smc/ensemble.hpp"
#include "dvsmc/util/random.hpp"

namespace dvsmc::smc {

// Offspring indices for the comb u + k / N, u in [0, 1/N).
std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u);
std::vector<std::size_t> systematic_indices(std::span<const double> weights, Rng& rng);

// Gathers offspring rows; the result has uniform weights.
Ensemble systematic_resample(const Ensemble& ensemble, Rng& rng);

struct SinkhornConfig {
  double epsilon = 0.5;  // in units of the mean pairwise cost
  int max_iterations = 100;
  double tolerance = 1e-10;  // max row-marginal violation; 0 runs all iterations
};

struct TransportPlan {
  ad::Tensor plan;  // [N, N], rows sum to the source weights, columns to 1/N
  int iterations = 0;
  double marginal_error = 0.0;
  bool converged = false;
};

// Entropy-regularized transport between the weighted ensemble and the uniform
// measure on the same points, cost ||z_i - z_j||^2 divided by its mean.
// Log-domain Sinkhorn; every iteration is recorded on the tape.
TransportPlan sinkhorn(const ad::Tensor& particles, const ad::Tensor& log_weights, const SinkhornConfig& config);

struct OtResult {
  Ensemble ensemble;
  TransportPlan transport;
};

// New particles N * P^T Z with uniform weights; differentiable in both
// particles and log-weights.
OtResult ot_resample(const Ensemble& ensemble, const SinkhornConfig& config);

}  // namespace dvsmc::smc
