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

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dvsmc/autodiff/tensor.hpp"
#include "dvsmc/distributions/kde.hpp"
#include "dvsmc/ssm/lorenz.hpp"

namespace dvsmc::eval {

struct PriorConfig {
  std::size_t length = 100000;
  std::size_t burn_in = 1000;
  std::uint64_t seed = 0;
  // Evaluation grid; outside it the exact KDE is used.
  double spacing = 0.5;
  std::array<double, 3> lower{-40.0, -40.0, -20.0};
  std::array<double, 3> upper{40.0, 40.0, 70.0};
};

// KDE over a long noise-free Lorenz run with Scott bandwidth. log_pdf
// interpolates a binned estimate of the same KDE on a regular grid.
class AttractorPrior {
 public:
  static AttractorPrior build(const PriorConfig& config = {}, const ssm::LorenzParams& lorenz = {});

  const dist::Kde& kde() const { return kde_; }
  const PriorConfig& config() const { return config_; }

  double log_pdf(const ssm::StateVector& z) const;
  // Sums only the kernels within 50 nats of the nearest one (relative
  // truncation below 1e-16 for 1e5 points).
  double exact_log_pdf(const ssm::StateVector& z) const;
  // [n, 3]
  ad::Tensor sample(std::size_t n, Rng& rng) const;

 private:
  AttractorPrior(dist::Kde kde, const PriorConfig& config);
  void build_grid();
  void build_index();

  struct Bucket {
    std::array<double, 3> lo;  // bounds of its points in bandwidth units
    std::array<double, 3> hi;
    std::size_t begin;
    std::size_t end;
  };

  dist::Kde kde_;
  PriorConfig config_;
  std::array<std::size_t, 3> shape_{};
  std::vector<double> log_grid_;  // -inf where the binned density underflows
  std::vector<Bucket> buckets_;
  std::vector<double> scaled_;  // samples divided by the bandwidth, grouped by bucket
  double log_norm_ = 0.0;
};

}  // namespace dvsmc::eval
