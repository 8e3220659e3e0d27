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

#include "dvsmc/ssm/lorenz.hpp"

#include <cmath>
#include <stdexcept>

namespace dvsmc::ssm {
namespace {

StateVector axpy(const StateVector& x, double a, const StateVector& y) {
  return {x[0] + a * y[0], x[1] + a * y[1], x[2] + a * y[2]};
}

bool finite(const StateVector& s) {
  return std::isfinite(s[0]) && std::isfinite(s[1]) && std::isfinite(s[2]);
}

}  // namespace

StateVector lorenz_drift(const StateVector& s, const LorenzParams& p) {
  return {p.sigma * (s[1] - s[0]), s[0] * (p.rho - s[2]) - s[1], s[0] * s[1] - p.beta * s[2]};
}

StateVector rk4_step(const StateVector& s, double dt, const LorenzParams& p) {
  const StateVector k1 = lorenz_drift(s, p);
  const StateVector k2 = lorenz_drift(axpy(s, 0.5 * dt, k1), p);
  const StateVector k3 = lorenz_drift(axpy(s, 0.5 * dt, k2), p);
  const StateVector k4 = lorenz_drift(axpy(s, dt, k3), p);
  StateVector out;
  for (std::size_t i = 0; i < kStateDim; ++i) {
    out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

StateVector lorenz_step(const StateVector& s, double dt, Rng& rng, const LorenzParams& p) {
  if (!(dt > 0.0)) throw std::invalid_argument("lorenz_step: dt must be positive");
  if (!finite(s)) throw std::domain_error("lorenz_step: non-finite state");
  StateVector out = rk4_step(s, dt, p);
  if (p.process_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, p.process_noise);
    for (auto& v : out) v += noise(rng);
  }
  if (!finite(out)) throw std::domain_error("lorenz_step: integration diverged");
  return out;
}

StateVector sample_attractor_state(Rng& rng, const LorenzParams& p) {
  std::uniform_int_distribution<int> burn_in(100, 1100);
  StateVector s{1.0, 1.0, 1.0};
  for (int i = burn_in(rng); i > 0; --i) s = rk4_step(s, p.dt, p);
  return s;
}

}  // namespace dvsmc::ssm
