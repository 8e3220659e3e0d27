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
#include "dvsmc/util/random.hpp"

namespace dvsmc::dist {

inline constexpr double kMinLogVariance = -10.0;
inline constexpr double kMaxLogVariance = 4.0;

// Batch of N mixtures, each with K diagonal Gaussian components over R^d.
// Log-variances are stored as given and clamped to
// [kMinLogVariance, kMaxLogVariance] wherever they are used.
struct GmmParams {
  ad::Tensor logits;         // [N, K]
  ad::Tensor means;          // [N, K, d]
  ad::Tensor log_variances;  // [N, K, d]

  std::size_t count() const { return logits.dim(0); }
  std::size_t components() const { return logits.dim(1); }
  std::size_t dim() const { return means.dim(2); }
};

constexpr std::size_t gmm_raw_size(std::size_t k, std::size_t d) { return k * (2 * d + 1); }

// raw: [N, K(2d + 1)] laid out as K logits, K*d means, K*d log-variances.
GmmParams parse_gmm(const ad::Tensor& raw, std::size_t k, std::size_t d);
ad::Tensor flatten_gmm(const GmmParams& params);

// log N(x; mean, diag(exp(log_var))) reduced over the last axis.
ad::Tensor diag_gaussian_log_pdf(const ad::Tensor& mean, const ad::Tensor& log_var, const ad::Tensor& x);

// x: [N, d]. Returns [N] with log sum_k pi_k N(x_n; mu_nk, sigma_nk^2).
ad::Tensor gmm_log_pdf(const GmmParams& params, const ad::Tensor& x);

struct GmmSample {
  ad::Tensor values;                   // [N, d]
  std::vector<std::size_t> components;  // chosen slot per row
};

// Component by inverse CDF on the mixture weights (no gradient), then
// mean + sigma * eps for the chosen component (pathwise gradient).
GmmSample gmm_sample(const GmmParams& params, Rng& rng);

// Same map with pinned draws: uniforms [N], normals [N * d].
GmmSample gmm_sample(const GmmParams& params, std::span<const double> uniforms, std::span<const double> normals);

// Single mixture component per row.
GmmParams single_gaussian(const ad::Tensor& means, const ad::Tensor& log_variances);

}  // namespace dvsmc::dist
