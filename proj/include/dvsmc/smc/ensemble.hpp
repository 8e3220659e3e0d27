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

namespace dvsmc::smc {

// N weighted particles. Log-weights are kept relative to uniform, i.e.
// log(N * w_i), so a freshly resampled ensemble has all-zero log-weights.
struct Ensemble {
  ad::Tensor particles;    // [N, d]
  ad::Tensor log_weights;  // [N]

  static Ensemble uniform(ad::Tensor particles);

  std::size_t size() const { return particles.dim(0); }
  std::size_t dim() const { return particles.dim(1); }
};

// log w~ = log w_prev + log p(y | z) + log p(z | z_prev) - log q(z | z_prev, y).
// All inputs [N]. Throws std::domain_error naming the first non-finite term.
ad::Tensor weight_update(const ad::Tensor& prev_log_weight, const ad::Tensor& log_likelihood,
                         const ad::Tensor& log_transition, const ad::Tensor& log_proposal);

struct Normalized {
  std::vector<double> weights;  // sum to 1
  double ess = 0.0;             // 1 / sum w^2
  double log_normalizer = 0.0;  // logsumexp(log_weights) - ln N
};

// Throws std::domain_error if no log-weight is finite or any is NaN/+inf.
Normalized normalize_and_ess(std::span<const double> log_weights);

double effective_sample_size(std::span<const double> weights);

}  // namespace dvsmc::smc
