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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dvsmc/autodiff/adamw.hpp"
#include "dvsmc/autodiff/parameters.hpp"
#include "dvsmc/smc/filter.hpp"

namespace dvsmc::training {

// One filtering problem: model pieces (bound to the current parameters),
// initial ensemble, length and the seed of its filter stream.
struct SequenceProblem {
  smc::StepModel model;
  smc::Ensemble init;
  std::size_t steps = 1;
  std::uint64_t seed = 0;
};

// Negated batch mean of the log-evidence estimates. Requires the optimal
// transport resampler. Throws std::domain_error naming the sequence on a
// non-finite objective.
ad::Tensor vsmc_objective(const std::vector<SequenceProblem>& batch, const smc::FilterConfig& config);

struct CurriculumStage {
  std::size_t epoch = 0;  // first epoch of the stage
  std::size_t length = 0;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  std::vector<CurriculumStage> curriculum;  // empty: T = 2, 4, 8 over thirds of the epochs
  std::size_t particles = 28;
  smc::SinkhornConfig sinkhorn;
  double max_grad_norm = 0.0;  // global-norm clipping; 0 disables
  std::uint64_t seed = 0;

  std::vector<CurriculumStage> schedule() const;
  std::size_t length_at(std::size_t epoch) const;
  void validate(std::size_t dataset_size) const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t length = 0;
  double objective = 0.0;  // mean log-evidence estimate over the epoch
  double grad_norm = 0.0;  // mean pre-clipping global norm over batches
  double seconds = 0.0;
  double val_error = 0.0;  // NaN when no validator is given
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  bool diverged = false;
  std::string failure;

  // Columns: epoch, length, objective, grad_norm, seconds, val_error.
  void write_csv(const std::filesystem::path& path) const;
};

// Builds problem `index` of the dataset for the given curriculum length; the
// rng is private to (epoch, index).
using ProblemBuilder =
    std::function<SequenceProblem(const ad::ParameterSet& bound, std::size_t index, std::size_t length, Rng& rng)>;
using Validator = std::function<double(const ad::ParameterSet& params)>;

struct TrainState {
  ad::ParameterSet params;
  ad::AdamW optimizer;
  std::size_t next_epoch = 0;
};

// Fresh state with an AdamW built from the config's learning rate and weight decay.
TrainState initial_state(ad::ParameterSet params, const TrainConfig& config);

// Runs epochs [state.next_epoch, config.epochs). Each sequence is filtered on
// its own tape; gradients are reduced in index order, so results do not depend
// on the worker count. On a non-finite objective or gradient the step is
// skipped, state keeps the last good parameters and report.diverged is set.
TrainReport train(TrainState& state, std::size_t dataset_size, const ProblemBuilder& build,
                  const TrainConfig& config, const Validator& validate = {});

}  // namespace dvsmc::training
