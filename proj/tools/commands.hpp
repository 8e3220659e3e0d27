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
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"

namespace dvsmc::cli {

// Exit code 4.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::vector<std::string>> methods;
  std::optional<std::string> regime;  // noise, partial or both
};

// File (or defaults), then flags, then validation.
ExperimentConfig resolve_config(const Overrides& overrides);

// Writes the resolved config and derived seeds to stderr-like `log` and to
// out/logs/<command>-config.toml.
void log_config(const ExperimentConfig& config, const std::string& command, std::ostream& log);

void cmd_simulate(const ExperimentConfig& config, std::ostream& log);
void cmd_train(const ExperimentConfig& config, bool resume, std::ostream& log);
void cmd_evaluate(const ExperimentConfig& config, std::ostream& log);
void cmd_plot(const ExperimentConfig& config, std::ostream& log);

// Parses arguments, runs the subcommand and maps failures to exit codes:
// 0 success, 1 other error, 2 config error, 3 missing or malformed artifact,
// 4 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& log);

}  // namespace dvsmc::cli
