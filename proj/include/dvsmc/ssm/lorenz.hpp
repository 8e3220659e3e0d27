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

#include "dvsmc/util/random.hpp"

namespace dvsmc::ssm {

inline constexpr std::size_t kStateDim = 3;

// Lorenz-63 state (x, y, z).
using StateVector = std::array<double, kStateDim>;

struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  double dt = 0.02;
  // Std of the additive state noise, applied once per filter step.
  double process_noise = 0.5;
};

StateVector lorenz_drift(const StateVector& s, const LorenzParams& p = {});

// One classic RK4 step of length dt, no noise.
StateVector rk4_step(const StateVector& s, double dt, const LorenzParams& p = {});

// Noise-free RK4 step followed by N(0, process_noise^2) per component.
// Throws std::domain_error on a non-finite input or result, std::invalid_argument
// if dt <= 0.
StateVector lorenz_step(const StateVector& s, double dt, Rng& rng, const LorenzParams& p = {});

// Runs the noise-free system from (1, 1, 1) for a random 100-1100 step burn-in.
StateVector sample_attractor_state(Rng& rng, const LorenzParams& p = {});

}  // namespace dvsmc::ssm
