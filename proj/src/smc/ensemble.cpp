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


#include "dvsmc/smc/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dvsmc/autodiff/ops.hpp"

namespace dvsmc::smc {

Ensemble Ensemble::uniform(ad::Tensor particles) {
  if (particles.rank() != 2 || particles.dim(0) == 0) {
    throw ad::ShapeError("Ensemble: particles must be [N, d] with N >= 1, got " + ad::to_string(particles.shape()));
  }
  const std::size_t n = particles.dim(0);
  return {std::move(particles), ad::Tensor::zeros({n})};
}

ad::Tensor weight_update(const ad::Tensor& prev_log_weight, const ad::Tensor& log_likelihood,
                         const ad::Tensor& log_transition, const ad::Tensor& log_proposal) {
  const std::pair<const char*, const ad::Tensor*> terms[] = {{"previous log-weight", &prev_log_weight},
                                                             {"log-likelihood", &log_likelihood},
                                                             {"log transition density", &log_transition},
                                                             {"log proposal density", &log_proposal}};
  for (const auto& [name, t] : terms) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      if (!std::isfinite((*t)[i])) {
        throw std::domain_error(std::string("weight_update: non-finite ") + name + " at particle " + std::to_string(i));
      }
    }
  }
  ad::Tensor out = prev_log_weight + log_likelihood + log_transition - log_proposal;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) throw std::domain_error("weight_update: non-finite result at particle " + std::to_string(i));
  }
  return out;
}

double effective_sample_size(std::span<const double> weights) {
  double sq = 0.0;
  for (double w : weights) sq += w * w;
  return 1.0 / sq;
}

Normalized normalize_and_ess(std::span<const double> log_weights) {
  if (log_weights.empty()) throw std::invalid_argument("normalize_and_ess: empty ensemble");
  double top = -std::numeric_limits<double>::infinity();
  for (double v : log_weights) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw std::domain_error("normalize_and_ess: NaN or +inf log-weight");
    }
    top = std::max(top, v);
  }
  if (!std::isfinite(top)) throw std::domain_error("normalize_and_ess: all particle weights vanished");
  Normalized out;
  out.weights.resize(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) total += out.weights[i] = std::exp(log_weights[i] - top);
  for (auto& w : out.weights) w /= total;
  out.ess = effective_sample_size(out.weights);
  out.log_normalizer = top + std::log(total) - std::log(static_cast<double>(log_weights.size()));
  return out;
}

}  // namespace dvsmc::smc
