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

#include <functional>
#include <random>
#include <vector>

#include "dvsmc/autodiff/ops.hpp"
#include "dvsmc/ssm/measurement.hpp"
#include "gradcheck.hpp"

namespace dvsmc::testing {

using ad::Tensor;

// One case per differentiable operator: a random input generator and a
// scalar-valued function of the inputs.
struct OpCase {
  const char* name;
  std::function<std::vector<Tensor>(std::mt19937_64&)> inputs;
  Fn f;
};

inline std::vector<OpCase> op_cases() {
  return {
      {"add", [](auto& r) { return std::vector{random_tensor(r, {3, 4}), random_tensor(r, {4})}; },
       [](const auto& x) { return project(x[0] + x[1], 11); }},
      {"sub", [](auto& r) { return std::vector{random_tensor(r, {3, 1}), random_tensor(r, {3, 4})}; },
       [](const auto& x) { return project(x[0] - x[1], 12); }},
      {"mul", [](auto& r) { return std::vector{random_tensor(r, {2, 3}), random_tensor(r, {2, 3})}; },
       [](const auto& x) { return project(x[0] * x[1], 13); }},
      {"div", [](auto& r) { return std::vector{random_tensor(r, {2, 3}), random_tensor(r, {3}, 0.5, 2.0)}; },
       [](const auto& x) { return project(x[0] / x[1], 14); }},
      {"matmul", [](auto& r) { return std::vector{random_tensor(r, {3, 4}), random_tensor(r, {4, 2})}; },
       [](const auto& x) { return project(ad::matmul(x[0], x[1]), 15); }},
      {"conv2d",
       [](auto& r) { return std::vector{random_tensor(r, {2, 2, 5, 6}), random_tensor(r, {3, 2, 3, 3})}; },
       [](const auto& x) { return project(ad::conv2d(x[0], x[1]), 16); }},
      {"maxpool2x2", [](auto& r) { return std::vector{random_tensor(r, {1, 2, 5, 4})}; },
       [](const auto& x) { return project(ad::maxpool2x2(x[0]), 17); }},
      {"relu", [](auto& r) { return std::vector{random_tensor(r, {7})}; },
       [](const auto& x) { return project(ad::relu(x[0]), 18); }},
      {"exp", [](auto& r) { return std::vector{random_tensor(r, {6})}; },
       [](const auto& x) { return project(ad::exp(x[0]), 19); }},
      {"tanh", [](auto& r) { return std::vector{random_tensor(r, {6}, -2.0, 2.0)}; },
       [](const auto& x) { return project(ad::tanh(x[0]), 27); }},
      {"log", [](auto& r) { return std::vector{random_tensor(r, {6}, 0.2, 3.0)}; },
       [](const auto& x) { return project(ad::log(x[0]), 20); }},
      {"logsumexp", [](auto& r) { return std::vector{random_tensor(r, {3, 5}, -4.0, 4.0)}; },
       [](const auto& x) { return project(ad::logsumexp(x[0], 1), 21); }},
      {"softmax", [](auto& r) { return std::vector{random_tensor(r, {4, 3}, -3.0, 3.0)}; },
       [](const auto& x) { return project(ad::softmax(x[0], 0), 22); }},
      {"sum", [](auto& r) { return std::vector{random_tensor(r, {3, 4, 2})}; },
       [](const auto& x) { return project(ad::sum(x[0], 1), 23); }},
      {"mean", [](auto& r) { return std::vector{random_tensor(r, {3, 4})}; },
       [](const auto& x) { return ad::mean(ad::square(x[0])); }},
      {"square", [](auto& r) { return std::vector{random_tensor(r, {5})}; },
       [](const auto& x) { return project(ad::square(x[0]), 24); }},
      {"sqrt", [](auto& r) { return std::vector{random_tensor(r, {5}, 0.3, 4.0)}; },
       [](const auto& x) { return project(ad::sqrt(x[0]), 25); }},
      {"gather", [](auto& r) { return std::vector{random_tensor(r, {4, 3})}; },
       [](const auto& x) {
         const std::vector<std::size_t> idx{2, 0, 2, 3, 3};
         return project(ad::gather(x[0], 0, idx), 26);
       }},
      {"concat", [](auto& r) { return std::vector{random_tensor(r, {2, 3}), random_tensor(r, {2, 2})}; },
       [](const auto& x) { return project(ad::concat(std::vector{x[0], x[1]}, 1), 27); }},
      {"reshape", [](auto& r) { return std::vector{random_tensor(r, {2, 6})}; },
       [](const auto& x) { return project(ad::reshape(x[0], {3, 4}), 28); }},
      {"transpose", [](auto& r) { return std::vector{random_tensor(r, {2, 5})}; },
       [](const auto& x) { return project(ad::transpose(x[0]), 29); }},
      {"slice", [](auto& r) { return std::vector{random_tensor(r, {3, 6})}; },
       [](const auto& x) { return project(ad::slice(x[0], 1, 1, 4), 30); }},
      {"clamp", [](auto& r) { return std::vector{random_tensor(r, {8}, -2.0, 2.0)}; },
       [](const auto& x) { return project(ad::clamp(x[0], -1.0, 1.0), 31); }},
      {"render", [](auto& r) { return std::vector{random_tensor(r, {3, 3}, -20.0, 20.0)}; },
       [](const auto& x) { return project(ssm::render(x[0]), 32); }},
      {"render_pixels", [](auto& r) { return std::vector{random_tensor(r, {4, 3}, -20.0, 20.0)}; },
       [](const auto& x) {
         const std::vector<std::size_t> pixels{300, 405, 406, 783};
         return project(ssm::render_pixels(x[0], pixels), 33);
       }},
      {"image_log_likelihood", [](auto& r) { return std::vector{random_tensor(r, {3, 3}, -20.0, 20.0)}; },
       [](const auto& x) {
         static const ssm::ObservationFrame frame = ssm::full_frame(ssm::render(ssm::StateVector{3.0, -4.0, 20.0}));
         return project(ssm::log_likelihood(x[0], frame, 0.3), 34);
       }},
  };
}

}  // namespace dvsmc::testing
