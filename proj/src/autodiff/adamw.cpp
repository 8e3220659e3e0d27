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

#include "dvsmc/autodiff/adamw.hpp"

#include <cmath>
#include <stdexcept>

#include "dvsmc/io/archive.hpp"

namespace dvsmc::ad {

void AdamW::step(ParameterSet& params, const Gradients& grads) {
  if (grads.size() != params.size()) throw std::invalid_argument("AdamW: gradient count mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].size() != params.values()[i].size()) {
      throw ShapeError("AdamW: gradient for '" + params.names()[i] + "' has wrong size");
    }
    for (double g : grads[i]) {
      if (!std::isfinite(g)) {
        throw std::domain_error("AdamW: non-finite gradient for parameter '" + params.names()[i] + "'");
      }
    }
  }
  if (state_.first_moment.empty()) {
    state_.first_moment = params.zero_gradients();
    state_.second_moment = params.zero_gradients();
  }
  ++state_.step;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state_.step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state_.step));
  const double lr = config_.learning_rate;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const Tensor& p = params.values()[i];
    std::vector<double> theta(p.data().begin(), p.data().end());
    auto& m = state_.first_moment[i];
    auto& v = state_.second_moment[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double g = grads[i][j];
      theta[j] -= lr * config_.weight_decay * theta[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      theta[j] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
    params.set(i, Tensor(p.shape(), std::move(theta)));
  }
}

void AdamW::save(io::Archive& archive, const ParameterSet& params, const std::string& prefix) const {
  archive.meta[prefix + "step"] = state_.step;
  if (state_.first_moment.empty()) return;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& shape = params.values()[i].shape();
    archive.put(prefix + "m/" + params.names()[i], Tensor(shape, state_.first_moment[i]));
    archive.put(prefix + "v/" + params.names()[i], Tensor(shape, state_.second_moment[i]));
  }
}

void AdamW::load(const io::Archive& archive, const ParameterSet& params, const std::string& prefix) {
  state_ = {};
  if (archive.meta.contains(prefix + "step")) state_.step = archive.meta[prefix + "step"].get<std::uint64_t>();
  if (params.size() == 0 || !archive.has(prefix + "m/" + params.names()[0])) return;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& m = archive.get(prefix + "m/" + params.names()[i]);
    const auto& v = archive.get(prefix + "v/" + params.names()[i]);
    state_.first_moment.emplace_back(m.data().begin(), m.data().end());
    state_.second_moment.emplace_back(v.data().begin(), v.data().end());
  }
}

}  // namespace dvsmc::ad
