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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dvsmc/baselines/filters.hpp"
#include "dvsmc/eval/metrics.hpp"
#include "dvsmc/eval/prior.hpp"
#include "dvsmc/models/networks.hpp"
#include "dvsmc/ssm/dataset.hpp"

namespace dvsmc::eval {

// Method names: dpf, bpf (N = 28), bpf10x (N = 280), ekf, supervised.
const std::vector<std::string>& known_methods();
bool is_known_method(const std::string& name);

enum class Sweep { kNoise, kPartial };
std::string to_string(Sweep sweep);
Sweep parse_sweep(const std::string& name);  // "noise-sweep" or "partial-sweep"

struct EvalConfig {
  Sweep sweep = Sweep::kNoise;
  std::vector<double> conditions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};  // sigma_v or P
  double fixed_sigma_v = 0.1;     // partial sweep
  double fixed_proportion = 1.0;  // noise sweep
  std::vector<std::string> methods{"dpf", "bpf", "bpf10x", "ekf", "supervised"};
  std::vector<std::uint64_t> seeds;
  std::size_t particles = 28;
  std::size_t particles_10x = 280;
  bool elbo = true;
  ElboConfig elbo_config;
  baselines::ConstantVelocity cv;

  double sigma_v(double condition) const { return sweep == Sweep::kNoise ? condition : fixed_sigma_v; }
  double proportion(double condition) const { return sweep == Sweep::kPartial ? condition : fixed_proportion; }
  // Throws std::invalid_argument on an empty grid or method list, an unknown
  // method, or fewer than two seeds.
  void validate() const;
};

struct TrainedModels {
  std::optional<models::Checkpoint> dpf;
  std::optional<models::Checkpoint> supervised;
};

// Frames for (seed, condition index, sequence): identical across methods.
ssm::Trajectory observe_for_seed(const ssm::Trajectory& truth, double sigma_v, double proportion, std::uint64_t seed,
                                 std::size_t condition_index, std::size_t sequence);

// One method, one condition, one seed, all validation sequences.
SeedResult evaluate_seed(const std::string& method, std::size_t condition_index, std::uint64_t seed,
                         const ssm::Dataset& validation, const TrainedModels& models, const AttractorPrior& prior,
                         const EvalConfig& config);

// All (method, condition, seed) tuples in parallel, then aggregated. Rows are
// ordered by method, condition, seed.
EvalReport run_evaluation(const ssm::Dataset& validation, const TrainedModels& models, const AttractorPrior& prior,
                          const EvalConfig& config);

}  // namespace dvsmc::eval
