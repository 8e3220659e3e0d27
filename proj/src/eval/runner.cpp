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


#include "dvsmc/eval/runner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dvsmc/util/parallel.hpp"

namespace dvsmc::eval {
namespace {

std::uint64_t method_stream(const std::string& method) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : method) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return h;
}

std::vector<ssm::StateVector> positions(const smc::FilterTrace& trace) {
  std::vector<ssm::StateVector> out(trace.length());
  for (std::size_t t = 0; t < trace.length(); ++t) {
    const auto m = trace.posterior_mean(t);
    out[t] = {m[0], m[1], m[2]};
  }
  return out;
}

const models::Checkpoint& require(const std::optional<models::Checkpoint>& ck, const std::string& method) {
  if (!ck) throw std::invalid_argument("evaluate: method '" + method + "' needs a trained checkpoint");
  return *ck;
}

struct SequenceOutcome {
  std::vector<double> errors;
  ElboTerms elbo;
};

SequenceOutcome run_sequence(const std::string& method, const ssm::Trajectory& seq, const TrainedModels& models,
                             const AttractorPrior& prior, const EvalConfig& config, Rng& rng) {
  SequenceOutcome out;
  std::vector<dist::Gaussian> q;
  const LogDensity log_prior = prior_density(prior);
  if (method == "dpf") {
    const auto& ck = require(models.dpf, method);
    const smc::Ensemble init = smc::Ensemble::uniform(prior.sample(config.particles, rng));
    const auto run = smc::run_filter(seq.length(), models::dpf_step_model(ck.params, ck.config, seq.frames, seq.sigma_v),
                                     smc::FilterConfig::with_particles(config.particles), init, rng);
    out.errors = tracking_errors(run.trace, seq.states);
    if (config.elbo) out.elbo = elbo_decompose(run.trace, seq.frames, seq.sigma_v, log_prior, config.elbo_config, rng);
    return out;
  }
  if (method == "bpf" || method == "bpf10x") {
    const std::size_t n = method == "bpf" ? config.particles : config.particles_10x;
    const auto run = baselines::run_bpf(seq, seq.initial, n, rng, config.cv);
    out.errors = tracking_errors(run.trace, seq.states);
    if (config.elbo) out.elbo = elbo_decompose(run.trace, seq.frames, seq.sigma_v, log_prior, config.elbo_config, rng);
    return out;
  }
  if (method == "ekf") {
    const auto run = baselines::run_ekf(seq, seq.initial, config.cv);
    out.errors = tracking_errors(positions(run.trace), seq.states);
    if (config.elbo) {
      for (std::size_t t = 0; t < seq.length(); ++t) {
        const auto& m = run.trace.states[t];
        q.emplace_back(Eigen::Vector3d(m[0], m[1], m[2]), run.covariances[t].topLeftCorner<3, 3>().eval());
      }
      out.elbo = elbo_terms(q, seq.frames, seq.sigma_v, log_prior, config.elbo_config, rng);
    }
    return out;
  }
  if (method == "supervised") {
    const auto& ck = require(models.supervised, method);
    const ad::Tensor pred = models::supervised_predict(ck.params, ck.config, models::encoder_input(seq.frames));
    std::vector<ssm::StateVector> est(seq.length());
    for (std::size_t t = 0; t < seq.length(); ++t) {
      est[t] = {pred.data()[t * 3], pred.data()[t * 3 + 1], pred.data()[t * 3 + 2]};
      q.emplace_back(Eigen::Vector3d(est[t][0], est[t][1], est[t][2]), Eigen::Matrix3d::Identity());
    }
    out.errors = tracking_errors(est, seq.states);
    if (config.elbo) out.elbo = elbo_terms(q, seq.frames, seq.sigma_v, log_prior, config.elbo_config, rng);
    return out;
  }
  throw std::invalid_argument("unknown method '" + method + "'");
}

}  // namespace

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> names{"dpf", "bpf", "bpf10x", "ekf", "supervised"};
  return names;
}

bool is_known_method(const std::string& name) {
  const auto& m = known_methods();
  return std::find(m.begin(), m.end(), name) != m.end();
}

std::string to_string(Sweep sweep) { return sweep == Sweep::kNoise ? "noise-sweep" : "partial-sweep"; }

Sweep parse_sweep(const std::string& name) {
  if (name == "noise-sweep" || name == "noise") return Sweep::kNoise;
  if (name == "partial-sweep" || name == "partial") return Sweep::kPartial;
  throw std::invalid_argument("unknown sweep '" + name + "' (expected noise-sweep or partial-sweep)");
}

void EvalConfig::validate() const {
  if (conditions.empty()) throw std::invalid_argument("evaluation grid is empty");
  if (methods.empty()) throw std::invalid_argument("no methods selected");
  for (const auto& m : methods) {
    if (!is_known_method(m)) throw std::invalid_argument("unknown method '" + m + "'");
  }
  if (seeds.size() < 2) throw std::invalid_argument("need at least two seeds for confidence intervals");
  for (double c : conditions) {
    if (!(sigma_v(c) > 0.0)) throw std::invalid_argument("sigma_v must be positive");
    if (!(proportion(c) >= 0.0 && proportion(c) <= 1.0)) throw std::invalid_argument("P must lie in [0, 1]");
  }
  if (particles == 0 || particles_10x == 0) throw std::invalid_argument("particle counts must be positive");
}

ssm::Trajectory observe_for_seed(const ssm::Trajectory& truth, double sigma_v, double proportion, std::uint64_t seed,
                                 std::size_t condition_index, std::size_t sequence) {
  return ssm::reobserve(truth, sigma_v, proportion, derive_seed(seed, {0x4f4253ULL, condition_index, sequence}));
}

SeedResult evaluate_seed(const std::string& method, std::size_t condition_index, std::uint64_t seed,
                         const ssm::Dataset& validation, const TrainedModels& models, const AttractorPrior& prior,
                         const EvalConfig& config) {
  const double condition = config.conditions.at(condition_index);
  SeedResult r;
  r.method = method;
  r.condition = condition;
  r.seed = seed;
  const std::size_t count = validation.sequences.size();
  if (count == 0) throw std::invalid_argument("evaluate: empty validation set");
  double err = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const ssm::Trajectory seq = observe_for_seed(validation.sequences[i], config.sigma_v(condition),
                                                 config.proportion(condition), seed, condition_index, i);
    Rng rng = make_rng(seed, {0x46494cULL, condition_index, i, method_stream(method)});
    const SequenceOutcome o = run_sequence(method, seq, models, prior, config, rng);
    double mean = 0.0;
    for (double d : o.errors) mean += d;
    mean /= static_cast<double>(o.errors.size());
    r.sequence_errors.push_back(mean);
    err += mean;
    r.likelihood += o.elbo.likelihood / static_cast<double>(count);
    r.kl += o.elbo.kl / static_cast<double>(count);
    r.flagged_steps += o.elbo.flagged_steps;
  }
  r.tracking_error = err / static_cast<double>(count);
  r.elbo = r.likelihood - r.kl;
  return r;
}

EvalReport run_evaluation(const ssm::Dataset& validation, const TrainedModels& models, const AttractorPrior& prior,
                          const EvalConfig& config) {
  config.validate();
  struct Task {
    std::string method;
    std::size_t condition;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& m : config.methods) {
    if ((m == "dpf" && !models.dpf) || (m == "supervised" && !models.supervised)) {
      throw std::invalid_argument("evaluate: method '" + m + "' needs a trained checkpoint");
    }
    for (std::size_t c = 0; c < config.conditions.size(); ++c) {
      for (auto s : config.seeds) tasks.push_back({m, c, s});
    }
  }
  EvalReport report;
  report.mode = to_string(config.sweep);
  report.seeds = config.seeds;
  report.results.resize(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    report.results[i] = evaluate_seed(tasks[i].method, tasks[i].condition, tasks[i].seed, validation, models, prior, config);
  });
  report.aggregate();
  return report;
}

}  // namespace dvsmc::eval
