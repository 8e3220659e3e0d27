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


#include "dvsmc/distributions/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace dvsmc::dist {
namespace {

void check(std::span<const double> samples, std::size_t dim, std::span<const double> bandwidth) {
  if (dim == 0 || samples.empty() || samples.size() % dim != 0) throw std::invalid_argument("kde: need >= 1 sample");
  if (bandwidth.size() != dim) throw std::invalid_argument("kde: bandwidth size must equal dim");
  for (double h : bandwidth) {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("kde: bandwidth must be positive");
  }
}

double log_norm(std::size_t n, std::span<const double> bandwidth) {
  double c = -std::log(static_cast<double>(n));
  for (double h : bandwidth) c -= std::log(h * std::sqrt(2.0 * std::numbers::pi));
  return c;
}

double log_kernel_sum(std::span<const double> samples, std::size_t dim, std::span<const double> inv_h,
                      std::span<const double> x) {
  const std::size_t n = samples.size() / dim;
  // Streaming logsumexp of -0.5 |(x - s) / h|^2.
  double top = -std::numeric_limits<double>::infinity(), acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double q = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double u = (x[j] - samples[i * dim + j]) * inv_h[j];
      q += u * u;
    }
    const double e = -0.5 * q;
    if (e > top) {
      acc = acc * std::exp(top - e) + 1.0;
      top = e;
    } else {
      acc += std::exp(e - top);
    }
  }
  return top + std::log(acc);
}

}  // namespace

Kde::Kde(std::vector<double> samples, std::size_t dim, std::vector<double> bandwidth)
    : samples_(std::move(samples)), dim_(dim), bandwidth_(std::move(bandwidth)) {
  check(samples_, dim_, bandwidth_);
  log_norm_ = log_norm(size(), bandwidth_);
}

std::vector<double> Kde::scott_bandwidth(std::span<const double> samples, std::size_t dim) {
  if (dim == 0 || samples.size() < 2 * dim || samples.size() % dim != 0) {
    throw std::invalid_argument("scott_bandwidth: need >= 2 samples");
  }
  const std::size_t n = samples.size() / dim;
  const double factor = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(dim) + 4.0));
  std::vector<double> h(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += samples[i * dim + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (samples[i * dim + j] - mean) * (samples[i * dim + j] - mean);
    var /= static_cast<double>(n - 1);
    if (!(var > 0.0)) throw std::invalid_argument("scott_bandwidth: zero variance along a dimension");
    h[j] = std::sqrt(var) * factor;
  }
  return h;
}

double Kde::log_pdf(std::span<const double> x) const {
  if (x.size() != dim_) throw std::invalid_argument("Kde::log_pdf: dimension mismatch");
  std::vector<double> inv_h(dim_);
  for (std::size_t j = 0; j < dim_; ++j) inv_h[j] = 1.0 / bandwidth_[j];
  return log_norm_ + log_kernel_sum(samples_, dim_, inv_h, x);
}

void Kde::sample(Rng& rng, std::span<double> out) const {
  if (out.size() != dim_) throw std::invalid_argument("Kde::sample: dimension mismatch");
  std::uniform_int_distribution<std::size_t> pick(0, size() - 1);
  std::normal_distribution<double> z(0.0, 1.0);
  const std::size_t i = pick(rng);
  for (std::size_t j = 0; j < dim_; ++j) out[j] = samples_[i * dim_ + j] + bandwidth_[j] * z(rng);
}

double kde_log_pdf(std::span<const double> samples, std::size_t dim, std::span<const double> bandwidth,
                   std::span<const double> x) {
  check(samples, dim, bandwidth);
  if (x.size() != dim) throw std::invalid_argument("kde_log_pdf: dimension mismatch");
  std::vector<double> inv_h(dim);
  for (std::size_t j = 0; j < dim; ++j) inv_h[j] = 1.0 / bandwidth[j];
  return log_norm(samples.size() / dim, bandwidth) + log_kernel_sum(samples, dim, inv_h, x);
}

}  // namespace dvsmc::dist
