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
#include <filesystem>
#include <functional>
#include <vector>

#include <json.hpp>

#include "dvsmc/autodiff/tensor.hpp"
#include "dvsmc/distributions/gmm.hpp"
#include "dvsmc/io/archive.hpp"
#include "dvsmc/smc/ensemble.hpp"
#include "dvsmc/smc/resampling.hpp"
#include "dvsmc/util/random.hpp"

namespace dvsmc::smc {

enum class Resampler { kSystematic, kOptimalTransport };

struct FilterConfig {
  std::size_t particles = 28;
  double ess_threshold = 14.0;  // resample when ESS < ess_threshold
  Resampler resampler = Resampler::kSystematic;
  SinkhornConfig sinkhorn;

  // N particles with the threshold at max(1, N / 2).
  static FilterConfig with_particles(std::size_t n, Resampler resampler = Resampler::kSystematic);
  void validate() const;
};

// Per-step model pieces; t indexes the observation sequence from 0.
struct StepModel {
  std::function<dist::GmmParams(const ad::Tensor& prev, std::size_t t)> transition;
  // Empty: bootstrap filter, sample from the transition and weight by the
  // likelihood alone.
  std::function<dist::GmmParams(const ad::Tensor& prev, std::size_t t)> proposal;
  std::function<ad::Tensor(const ad::Tensor& particles, std::size_t t)> log_likelihood;
};

struct StepResult {
  Ensemble weighted;  // proposed particles with updated weights, before resampling
  Ensemble ensemble;  // state carried to the next step
  ad::Tensor increment;  // log p^(y_t | y_1:t-1), scalar
  std::vector<double> weights;
  double ess = 0.0;
  bool resampled = false;
  bool transport_converged = true;
};

// propose, weight, normalize, evidence increment, resample iff ESS < N_T.
StepResult filter_step(const Ensemble& ensemble, const StepModel& model, std::size_t t, const FilterConfig& config,
                       Rng& rng);

// Weighted ensembles per step plus the evidence recursion.
struct FilterTrace {
  std::size_t particles = 0;
  std::size_t dim = 0;
  std::vector<std::vector<double>> states;   // [T][N * dim], before resampling
  std::vector<std::vector<double>> weights;  // [T][N]
  std::vector<double> increments;
  std::vector<double> cumulative;
  std::vector<double> ess;
  std::vector<bool> resampled;
  std::vector<bool> transport_converged;

  std::size_t length() const { return increments.size(); }
  std::vector<double> posterior_mean(std::size_t t) const;
};

struct FilterRun {
  FilterTrace trace;
  ad::Tensor log_evidence;  // sum of increments, on the tape when inputs are
};

FilterRun run_filter(std::size_t steps, const StepModel& model, const FilterConfig& config, const Ensemble& init,
                     Rng& rng);

// Archive kind "trace".
io::Archive trace_to_archive(const FilterTrace& trace, const nlohmann::json& meta = nlohmann::json::object());
FilterTrace trace_from_archive(const io::Archive& archive);
void save_trace(const FilterTrace& trace, const std::filesystem::path& path,
                const nlohmann::json& meta = nlohmann::json::object());
FilterTrace load_trace(const std::filesystem::path& path);

}  // namespace dvsmc::smc
