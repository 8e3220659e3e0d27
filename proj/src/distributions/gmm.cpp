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


#include "dvsmc/distributions/gmm.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "dvsmc/autodiff/ops.hpp"

namespace dvsmc::dist {

using ad::Tensor;

GmmParams parse_gmm(const Tensor& raw, std::size_t k, std::size_t d) {
  if (k == 0 || d == 0) throw std::invalid_argument("parse_gmm: K and d must be positive");
  if (raw.rank() != 2 || raw.dim(1) != gmm_raw_size(k, d)) {
    throw ad::ShapeError("parse_gmm: expected [N, " + std::to_string(gmm_raw_size(k, d)) + "], got " +
                         ad::to_string(raw.shape()));
  }
  const std::size_t n = raw.dim(0);
  GmmParams p;
  p.logits = ad::slice(raw, 1, 0, k);
  p.means = ad::reshape(ad::slice(raw, 1, k, k + k * d), {n, k, d});
  p.log_variances = ad::reshape(ad::slice(raw, 1, k + k * d, k + 2 * k * d), {n, k, d});
  return p;
}

Tensor flatten_gmm(const GmmParams& params) {
  const std::size_t n = params.count(), kd = params.components() * params.dim();
  const Tensor parts[] = {params.logits, ad::reshape(params.means, {n, kd}), ad::reshape(params.log_variances, {n, kd})};
  return ad::concat(parts, 1);
}

Tensor diag_gaussian_log_pdf(const Tensor& mean, const Tensor& log_var, const Tensor& x) {
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  const Tensor z = ad::square(x - mean) * ad::exp(-log_var);
  return -0.5 * ad::sum(z + log_var + log_two_pi, mean.rank() - 1);
}

Tensor gmm_log_pdf(const GmmParams& params, const Tensor& x) {
  const std::size_t n = params.count(), d = params.dim();
  if (x.rank() != 2 || x.dim(0) != n || x.dim(1) != d) {
    throw ad::ShapeError("gmm_log_pdf: expected x of shape [" + std::to_string(n) + ", " + std::to_string(d) +
                         "], got " + ad::to_string(x.shape()));
  }
  const Tensor lv = ad::clamp(params.log_variances, kMinLogVariance, kMaxLogVariance);
  const Tensor comp = diag_gaussian_log_pdf(params.means, lv, ad::reshape(x, {n, 1, d}));
  const Tensor log_pi = params.logits - ad::logsumexp(params.logits, 1, true);
  return ad::logsumexp(log_pi + comp, 1);
}

GmmSample gmm_sample(const GmmParams& params, std::span<const double> uniforms, std::span<const double> normals) {
  const std::size_t n = params.count(), k = params.components(), d = params.dim();
  if (uniforms.size() != n || normals.size() != n * d) throw std::invalid_argument("gmm_sample: draw count mismatch");
  const auto logits = params.logits.data();
  GmmSample out;
  out.components.resize(n);
  std::vector<std::size_t> rows(n);
  std::vector<double> w(k);
  for (std::size_t i = 0; i < n; ++i) {
    double top = logits[i * k];
    for (std::size_t j = 1; j < k; ++j) top = std::max(top, logits[i * k + j]);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += w[j] = std::exp(logits[i * k + j] - top);
    const double target = uniforms[i] * total;
    std::size_t c = 0;
    for (double acc = w[0]; c + 1 < k && acc <= target; acc += w[++c]) {
    }
    out.components[i] = c;
    rows[i] = i * k + c;
  }
  const Tensor lv = ad::clamp(params.log_variances, kMinLogVariance, kMaxLogVariance);
  const Tensor mu = ad::gather(ad::reshape(params.means, {n * k, d}), 0, rows);
  const Tensor sd = ad::exp(0.5 * ad::gather(ad::reshape(lv, {n * k, d}), 0, rows));
  const Tensor eps({n, d}, std::vector<double>(normals.begin(), normals.end()));
  out.values = mu + sd * eps;
  return out;
}

GmmSample gmm_sample(const GmmParams& params, Rng& rng) {
  const std::size_t n = params.count(), d = params.dim();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> uniforms(n), normals(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    uniforms[i] = u(rng);
    for (std::size_t j = 0; j < d; ++j) normals[i * d + j] = z(rng);
  }
  return gmm_sample(params, uniforms, normals);
}

GmmParams single_gaussian(const Tensor& means, const Tensor& log_variances) {
  if (means.rank() != 2 || means.shape() != log_variances.shape()) {
    throw ad::ShapeError("single_gaussian: means and log-variances must both be [N, d]");
  }
  const std::size_t n = means.dim(0), d = means.dim(1);
  return {Tensor::zeros({n, 1}), ad::reshape(means, {n, 1, d}), ad::reshape(log_variances, {n, 1, d})};
}

}  // namespace dvsmc::dist
