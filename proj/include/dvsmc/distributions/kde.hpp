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

#include "dvsmc/util/random.hpp"

namespace dvsmc::dist {

// Gaussian product-kernel density estimate with a per-dimension bandwidth.
class Kde {
 public:
  // samples: row-major [n, dim].
  Kde(std::vector<double> samples, std::size_t dim, std::vector<double> bandwidth);

  // Scott's rule: h_j = std_j * n^(-1 / (dim + 4)).
  static std::vector<double> scott_bandwidth(std::span<const double> samples, std::size_t dim);

  std::size_t size() const { return samples_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  const std::vector<double>& samples() const { return samples_; }
  const std::vector<double>& bandwidth() const { return bandwidth_; }

  // Exact, evaluated in log domain over all samples.
  double log_pdf(std::span<const double> x) const;
  void sample(Rng& rng, std::span<double> out) const;

 private:
  std::vector<double> samples_;
  std::size_t dim_;
  std::vector<double> bandwidth_;
  double log_norm_ = 0.0;
};

double kde_log_pdf(std::span<const double> samples, std::size_t dim, std::span<const double> bandwidth,
                   std::span<const double> x);

}  // namespace dvsmc::dist
