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


#include "dvsmc/distributions/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace dvsmc::dist {

Gaussian::Gaussian(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size()) {
    throw std::invalid_argument("Gaussian: covariance shape does not match mean");
  }
  if (!mean_.allFinite() || !covariance_.allFinite()) throw std::domain_error("Gaussian: non-finite parameters");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() != Eigen::Success) throw std::domain_error("Gaussian: covariance is not positive definite");
  lower_ = llt.matrixL();
  const double log_det = 2.0 * lower_.diagonal().array().log().sum();
  log_norm_ = -0.5 * (static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi) + log_det);
}

double Gaussian::log_pdf(std::span<const double> x) const {
  if (x.size() != dim()) throw std::invalid_argument("Gaussian::log_pdf: dimension mismatch");
  const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(x.data(), mean_.size()) - mean_;
  const Eigen::VectorXd z = lower_.triangularView<Eigen::Lower>().solve(r);
  return log_norm_ - 0.5 * z.squaredNorm();
}

Eigen::VectorXd Gaussian::sample(Rng& rng) const {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd eps(mean_.size());
  for (auto& e : eps) e = n(rng);
  return mean_ + lower_ * eps;
}

Gaussian fit_gaussian(std::span<const double> particles, std::size_t dim, std::span<const double> weights,
                      double jitter) {
  if (dim == 0 || particles.size() != weights.size() * dim || weights.empty()) {
    throw std::invalid_argument("fit_gaussian: particle/weight size mismatch");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("fit_gaussian: negative or NaN weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("fit_gaussian: weights must sum to 1");
  const auto n = static_cast<Eigen::Index>(weights.size());
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> z(particles.data(), n, d);
  Eigen::Map<const Eigen::VectorXd> w(weights.data(), n);
  const Eigen::VectorXd mean = z.transpose() * w;
  const Eigen::MatrixXd centred = z.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centred.transpose() * w.asDiagonal() * centred;
  cov = 0.5 * (cov + cov.transpose());
  cov.diagonal().array() += jitter;
  return Gaussian(mean, cov);
}

}  // namespace dvsmc::dist
