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
#include <filesystem>
#include <vector>

#include "dvsmc/ssm/lorenz.hpp"
#include "dvsmc/ssm/measurement.hpp"

namespace dvsmc::ssm {

// Each sequence draws its sigma_v and observed proportion uniformly from these
// grids, which yields the mixed-condition training sets.
struct NoiseSettings {
  std::vector<double> sigma_v_grid{0.1};
  std::vector<double> proportion_grid{1.0};
};

struct Trajectory {
  StateVector initial{};  // state before the first observation
  std::vector<StateVector> states;
  std::vector<ObservationFrame> frames;
  double sigma_v = 0.1;
  double proportion = 1.0;
  std::uint64_t seed = 0;

  std::size_t length() const { return states.size(); }
};

struct Dataset {
  std::vector<Trajectory> sequences;
  LorenzParams lorenz;
  NoiseSettings settings;
  std::uint64_t seed = 0;
};

// Sequence i is generated from its own stream derived from (seed, i), so the
// result does not depend on the worker count.
Dataset generate_dataset(std::size_t count, std::size_t length, const NoiseSettings& settings,
                         std::uint64_t seed, const LorenzParams& lorenz = {});

Trajectory simulate_trajectory(std::size_t length, double sigma_v, double proportion, std::uint64_t seed,
                               const LorenzParams& lorenz = {});

// Same states, freshly drawn observation noise and mask.
Trajectory reobserve(const Trajectory& truth, double sigma_v, double proportion, std::uint64_t seed);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace dvsmc::ssm
