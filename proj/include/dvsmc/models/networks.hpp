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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvsmc/autodiff/adamw.hpp"
#include "dvsmc/autodiff/parameters.hpp"
#include "dvsmc/distributions/gmm.hpp"
#include "dvsmc/smc/filter.hpp"
#include "dvsmc/ssm/measurement.hpp"

// Networks:
//   encoder     [B, 2, 28, 28] -> [B, encoding]   (masked image, mask)
//               conv3x3 + ReLU + maxpool2x2, three times, channels c, 2c, 4c,
//               then one linear layer on the flattened 4c x 3 x 3 map
//   proposal    MLP on [state / state_scale, encoding]   -> K(2d + 1)
//   transition  MLP on state / state_scale               -> K(2d + 1)
//   supervised  encoder + MLP on encoding                -> d (scaled by state_scale)
//
// Each MLP has mlp_layers linear layers with ReLU between them. Parameter
// names, which checkpoints rely on:
//   <net>.encoder.conv{1,2,3}.{weight,bias}   weight [out, in, 3, 3]
//   <net>.encoder.fc.{weight,bias}            weight [in, out]
//   <net>.mlp.{0..L-1}.{weight,bias}          weight [in, out]
// with <net> one of proposal, transition, supervised.
namespace dvsmc::models {

struct NetworkConfig {
  std::size_t state_dim = 3;
  std::size_t components = 2;
  std::size_t encoding = 256;
  std::size_t hidden = 256;
  std::size_t mlp_layers = 6;
  std::size_t base_channels = 8;
  // Inputs are divided by state_scale; predicted mean offsets and supervised
  // outputs are multiplied by it.
  double state_scale = 10.0;

  std::size_t raw_size() const { return dist::gmm_raw_size(components, state_dim); }
  nlohmann::json to_json() const;
  static NetworkConfig from_json(const nlohmann::json& j);
};

// Proposal and transition parameters in one set (trained jointly).
ad::ParameterSet init_dpf(const NetworkConfig& config, std::uint64_t seed);
ad::ParameterSet init_supervised(const NetworkConfig& config, std::uint64_t seed);

// [B, 2, 28, 28] from frames; throws ad::ShapeError on a wrong-size frame.
ad::Tensor encoder_input(const std::vector<ssm::ObservationFrame>& frames);
ad::Tensor encoder_input(const ssm::ObservationFrame& frame);

// net: "proposal" or "supervised".
ad::Tensor encode(const ad::ParameterSet& params, const NetworkConfig& config, const std::string& net,
                  const ad::Tensor& input);

// prev: [N, d]; encoding: [1, encoding]. Raw outputs are [N, K(2d + 1)].
ad::Tensor proposal_raw(const ad::ParameterSet& params, const NetworkConfig& config, const ad::Tensor& prev,
                        const ad::Tensor& encoding);
ad::Tensor transition_raw(const ad::ParameterSet& params, const NetworkConfig& config, const ad::Tensor& prev);

// Parses raw output; component means become prev + state_scale * tanh(raw mean).
dist::GmmParams to_gmm(const NetworkConfig& config, const ad::Tensor& raw, const ad::Tensor& prev);

dist::GmmParams propose_params(const ad::ParameterSet& params, const NetworkConfig& config, const ad::Tensor& prev,
                               const ad::Tensor& encoding);
dist::GmmParams transition_params(const ad::ParameterSet& params, const NetworkConfig& config,
                                  const ad::Tensor& prev);

// [B, 2, 28, 28] -> [B, d].
ad::Tensor supervised_predict(const ad::ParameterSet& params, const NetworkConfig& config, const ad::Tensor& input);
ssm::StateVector supervised_predict(const ad::ParameterSet& params, const NetworkConfig& config,
                                    const ssm::ObservationFrame& frame);

// Filter model over a frame sequence: learned proposal and transition, image
// likelihood at sigma_v. All frames are encoded up front.
smc::StepModel dpf_step_model(const ad::ParameterSet& params, const NetworkConfig& config,
                              const std::vector<ssm::ObservationFrame>& frames, double sigma_v);

// Archive kind "checkpoint": parameters under their names, optimizer moments
// under "adamw/m/<name>" and "adamw/v/<name>", config and meta in the header.
struct Checkpoint {
  NetworkConfig config;
  ad::ParameterSet params;
  std::optional<ad::AdamW> optimizer;
  nlohmann::json meta = nlohmann::json::object();
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dvsmc::models
