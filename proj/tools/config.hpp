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
#include <stdexcept>
#include <string>
#include <vector>

#include "dvsmc/baselines/filters.hpp"
#include "dvsmc/eval/prior.hpp"
#include "dvsmc/eval/runner.hpp"
#include "dvsmc/models/networks.hpp"
#include "dvsmc/ssm/dataset.hpp"
#include "dvsmc/training/vsmc.hpp"

namespace dvsmc::cli {

// Exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exit code 3.
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Regime { kNoise, kPartial };
std::string to_string(Regime r);
Regime parse_regime(const std::string& name);  // "noise" or "partial"

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "runs/default";
  std::vector<Regime> regimes{Regime::kNoise, Regime::kPartial};

  // [data]
  std::size_t train_sequences = 1024;
  std::size_t train_length = 8;
  std::size_t val_sequences = 32;
  std::size_t val_length = 128;
  ssm::LorenzParams lorenz;

  // [noise] and [partial]
  std::vector<double> noise_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  double noise_proportion = 1.0;
  std::vector<double> partial_grid{0.2, 0.4, 0.6, 0.8, 1.0};
  double partial_sigma_v = 0.1;

  models::NetworkConfig network;

  // [train]
  training::TrainConfig train{.max_grad_norm = 10.0};
  std::size_t supervised_epochs = 50;
  std::size_t validation_sequences = 4;  // per-epoch validation subset

  // [evaluate]
  std::vector<std::string> methods{"dpf", "bpf", "bpf10x", "ekf", "supervised"};
  std::size_t num_seeds = 20;
  std::size_t particles_10x = 280;
  bool elbo = true;
  std::size_t mc_samples = 128;

  eval::PriorConfig prior;
  baselines::ConstantVelocity cv;

  // Parses a TOML document; unknown keys and bad values raise ConfigError.
  static ExperimentConfig parse(const std::string& toml_text, const std::string& source = "config");
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_toml() const;
  void validate() const;

  std::vector<std::uint64_t> eval_seeds() const;
  ssm::NoiseSettings settings(Regime r) const;
  eval::EvalConfig eval_config(Regime r) const;
  std::uint64_t data_seed(Regime r, bool validation) const;
  std::uint64_t model_seed(Regime r) const;

  std::filesystem::path dataset_path(Regime r, bool validation) const;
  std::filesystem::path checkpoint_path(Regime r, const std::string& model) const;
  std::filesystem::path report_path(Regime r, const std::string& model) const;
  std::filesystem::path eval_dir(Regime r) const;
  std::filesystem::path plot_dir() const;
  std::filesystem::path log_dir() const;
};

}  // namespace dvsmc::cli
