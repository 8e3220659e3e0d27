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
#include <string>
#include <vector>

#include <json.hpp>

#include "dvsmc/distributions/gaussian.hpp"
#include "dvsmc/eval/prior.hpp"
#include "dvsmc/smc/filter.hpp"
#include "dvsmc/ssm/measurement.hpp"

namespace dvsmc::eval {

// d_t = |weighted particle mean - truth| over the first three coordinates.
// Throws std::invalid_argument on a length mismatch.
std::vector<double> tracking_errors(const smc::FilterTrace& trace, const std::vector<ssm::StateVector>& truth);
std::vector<double> tracking_errors(const std::vector<ssm::StateVector>& estimates,
                                    const std::vector<ssm::StateVector>& truth);

// Gaussian fit of the position part of step t of a trace.
dist::Gaussian fit_position(const smc::FilterTrace& trace, std::size_t t, double jitter = 1e-6);

struct ElboConfig {
  std::size_t mc_samples = 128;
  double jitter = 1e-6;  // added to fitted covariances
};

// Monte Carlo estimates of E_q[log p(y|z)] and E_q[log q(z) - log p(z)],
// averaged over time.
struct ElboTerms {
  double likelihood = 0.0;
  double kl = 0.0;
  double kl_standard_error = 0.0;  // of the time average
  std::size_t flagged_steps = 0;   // per-step KL estimates below -3 standard errors
  double elbo() const { return likelihood - kl; }
};

using LogDensity = std::function<double(const ssm::StateVector&)>;
LogDensity prior_density(const AttractorPrior& prior);  // keeps a reference

// One posterior per frame. Throws std::invalid_argument on a length mismatch.
ElboTerms elbo_terms(const std::vector<dist::Gaussian>& posteriors, const std::vector<ssm::ObservationFrame>& frames,
                     double sigma_v, const LogDensity& prior, const ElboConfig& config, Rng& rng);

// Fits each weighted ensemble with a Gaussian. Throws std::domain_error when a
// cloud is degenerate (fit not positive definite).
ElboTerms elbo_decompose(const smc::FilterTrace& trace, const std::vector<ssm::ObservationFrame>& frames,
                         double sigma_v, const LogDensity& prior, const ElboConfig& config, Rng& rng);

// ---- aggregation ----

struct Interval {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 sd / sqrt(n)
  std::size_t count = 0;
  double low() const { return mean - half_width; }
  double high() const { return mean + half_width; }
};

// Normal-approximation 95% interval. Throws std::invalid_argument for fewer
// than two values.
Interval confidence_interval(const std::vector<double>& values);

// Per-seed result of one method under one condition.
struct SeedResult {
  std::string method;
  double condition = 0.0;  // sigma_v or P
  std::uint64_t seed = 0;
  double tracking_error = 0.0;  // mean over sequences and steps
  double likelihood = 0.0;      // ELBO terms, mean over sequences
  double kl = 0.0;
  double elbo = 0.0;
  std::size_t flagged_steps = 0;
  std::vector<double> sequence_errors;  // per sequence, mean over steps
};

struct Aggregate {
  std::string method;
  double condition = 0.0;
  Interval tracking_error;
  Interval likelihood;
  Interval kl;
  Interval elbo;
};

struct EvalReport {
  std::string mode;  // noise-sweep or partial-sweep
  std::vector<std::uint64_t> seeds;
  std::vector<SeedResult> results;
  std::vector<Aggregate> aggregates;

  // Groups results by (method, condition) in order of first appearance.
  void aggregate();
  const Aggregate& find(const std::string& method, double condition) const;

  // Per-seed rows: method,condition,seed,tracking_error,likelihood,kl,elbo,flagged_steps.
  void write_results_csv(const std::filesystem::path& path) const;
  // method,condition,metric,mean,ci_low,ci_high,n.
  void write_aggregates_csv(const std::filesystem::path& path) const;
  nlohmann::json summary() const;
  static EvalReport from_results_csv(const std::filesystem::path& path, const std::string& mode);
};

}  // namespace dvsmc::eval
