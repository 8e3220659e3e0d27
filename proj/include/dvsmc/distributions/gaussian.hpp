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

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstddef>
#include <span>

#include "dvsmc/util/random.hpp"

namespace dvsmc::dist {

// Multivariate normal with full covariance.
class Gaussian {
 public:
  // Throws std::domain_error if the covariance is not positive definite.
  Gaussian(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }

  double log_pdf(std::span<const double> x) const;
  Eigen::VectorXd sample(Rng& rng) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd lower_;
  double log_norm_ = 0.0;
};

// Weighted mean and covariance of a particle cloud, with `jitter` added to the
// diagonal. particles: row-major [N, dim]; weights must sum to 1.
Gaussian fit_gaussian(std::span<const double> particles, std::size_t dim, std::span<const double> weights,
                      double jitter = 1e-6);

}  // namespace dvsmc::dist
