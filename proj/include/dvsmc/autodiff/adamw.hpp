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

#include <cstdint>
#include <string>
#include <vector>

#include "dvsmc/autodiff/parameters.hpp"

namespace dvsmc::io {
class Archive;
}

namespace dvsmc::ad {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
};

// Adam with decoupled weight decay:
//   theta <- theta - lr * wd * theta
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
class AdamW {
 public:
  explicit AdamW(AdamWConfig config = {}) : config_(config) {}

  // Throws std::domain_error naming the first parameter with a non-finite gradient;
  // parameters are left untouched in that case.
  void step(ParameterSet& params, const Gradients& grads);

  const AdamWConfig& config() const { return config_; }
  const AdamWState& state() const { return state_; }

  void save(io::Archive& archive, const ParameterSet& params, const std::string& prefix) const;
  void load(const io::Archive& archive, const ParameterSet& params, const std::string& prefix);

 private:
  AdamWConfig config_;
  AdamWState state_;
};

}  // namespace dvsmc::ad
