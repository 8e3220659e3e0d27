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
#include <functional>

#include "dvsmc/models/networks.hpp"
#include "dvsmc/ssm/dataset.hpp"
#include "dvsmc/training/vsmc.hpp"

namespace dvsmc::training {

// Draws [n, d] initial particles for the learned filter.
using InitSampler = std::function<ad::Tensor(std::size_t n, Rng& rng)>;

// Problem `index` filters a random window of `length` frames of sequence
// `index`, starting from `particles` draws of `init` and using the sequence's
// own sigma_v in the likelihood. The dataset must outlive the builder.
ProblemBuilder dpf_problem_builder(const ssm::Dataset& dataset, const models::NetworkConfig& network,
                                   std::size_t particles, InitSampler init);

// Mean Euclidean distance between supervised predictions and true states.
ad::Tensor supervised_loss(const ad::ParameterSet& params, const models::NetworkConfig& network,
                           const ssm::Trajectory& sequence);

// Regression training of the supervised encoder on every frame. Uses the
// epochs, batch size, optimizer and seed fields of the config; the report's
// objective column holds the mean training loss.
TrainReport train_supervised(TrainState& state, const models::NetworkConfig& network, const ssm::Dataset& dataset,
                             const TrainConfig& config, const Validator& validate = {});

}  // namespace dvsmc::training
