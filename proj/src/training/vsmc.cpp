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


#include "dvsmc/training/vsmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dvsmc/autodiff/ops.hpp"
#include "dvsmc/util/parallel.hpp"

namespace dvsmc::training {

ad::Tensor vsmc_objective(const std::vector<SequenceProblem>& batch, const smc::FilterConfig& config) {
  if (batch.empty()) throw std::invalid_argument("vsmc_objective: empty batch");
  if (config.resampler != smc::Resampler::kOptimalTransport) {
    throw std::invalid_argument("vsmc_objective: training requires the optimal-transport resampler");
  }
  ad::Tensor total;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const SequenceProblem& p = batch[i];
    Rng rng(p.seed);
    ad::Tensor ev;
    try {
      ev = smc::run_filter(p.steps, p.model, config, p.init, rng).log_evidence;
    } catch (const std::domain_error& e) {
      throw std::domain_error("vsmc_objective: sequence " + std::to_string(i) + ": " + e.what());
    }
    if (!std::isfinite(ev.item())) {
      throw std::domain_error("vsmc_objective: non-finite log-evidence for sequence " + std::to_string(i));
    }
    total = i == 0 ? ev : total + ev;
  }
  return total * (-1.0 / static_cast<double>(batch.size()));
}

std::vector<CurriculumStage> TrainConfig::schedule() const {
  if (!curriculum.empty()) return curriculum;
  return {{0, 2}, {epochs / 3, 4}, {2 * epochs / 3, 8}};
}

std::size_t TrainConfig::length_at(std::size_t epoch) const {
  std::size_t length = 0;
  for (const auto& s : schedule()) {
    if (s.epoch <= epoch) length = s.length;
  }
  return length;
}

void TrainConfig::validate(std::size_t dataset_size) const {
  if (batch_size == 0 || dataset_size % batch_size != 0) {
    throw std::invalid_argument("TrainConfig: batch size " + std::to_string(batch_size) +
                                " must divide the dataset size " + std::to_string(dataset_size));
  }
  if (particles == 0) throw std::invalid_argument("TrainConfig: need at least one particle");
  if (!(learning_rate > 0.0) || !(weight_decay >= 0.0)) throw std::invalid_argument("TrainConfig: bad optimizer settings");
  const auto stages = schedule();
  if (stages.empty() || stages.front().epoch != 0) throw std::invalid_argument("TrainConfig: curriculum must start at epoch 0");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].length == 0) throw std::invalid_argument("TrainConfig: curriculum lengths must be positive");
    if (i > 0 && (stages[i].epoch < stages[i - 1].epoch || stages[i].length < stages[i - 1].length)) {
      throw std::invalid_argument("TrainConfig: curriculum must be non-decreasing");
    }
  }
}

void TrainReport::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,length,objective,grad_norm,seconds,val_error\n";
  char line[256];
  for (const auto& e : epochs) {
    std::snprintf(line, sizeof line, "%zu,%zu,%.17g,%.17g,%.3f,%.17g\n", e.epoch, e.length, e.objective, e.grad_norm,
                  e.seconds, e.val_error);
    out << line;
  }
}

TrainState initial_state(ad::ParameterSet params, const TrainConfig& config) {
  ad::AdamWConfig opt;
  opt.learning_rate = config.learning_rate;
  opt.weight_decay = config.weight_decay;
  return {std::move(params), ad::AdamW(opt), 0};
}

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;

struct SequenceOutcome {
  ad::Gradients grads;
  double objective = 0.0;
  std::string error;
};

}  // namespace

TrainReport train(TrainState& state, std::size_t dataset_size, const ProblemBuilder& build,
                  const TrainConfig& config, const Validator& validate) {
  config.validate(dataset_size);
  smc::FilterConfig fc = smc::FilterConfig::with_particles(config.particles, smc::Resampler::kOptimalTransport);
  fc.sinkhorn = config.sinkhorn;
  const std::size_t batches = dataset_size / config.batch_size;
  const std::size_t chunk = std::max<std::size_t>(1, thread_count());
  TrainReport report;

  for (std::size_t epoch = state.next_epoch; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t length = config.length_at(epoch);
    std::vector<std::size_t> order(dataset_size);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = make_rng(config.seed, {epoch, kShuffleStream});
    std::shuffle(order.begin(), order.end(), shuffle);

    double objective_sum = 0.0, norm_sum = 0.0;
    for (std::size_t b = 0; b < batches && !report.diverged; ++b) {
      ad::Gradients total = state.params.zero_gradients();
      double batch_objective = 0.0;
      for (std::size_t c0 = 0; c0 < config.batch_size && !report.diverged; c0 += chunk) {
        const std::size_t count = std::min(chunk, config.batch_size - c0);
        std::vector<SequenceOutcome> out(count);
        parallel_for(count, [&](std::size_t k) {
          const std::size_t index = order[b * config.batch_size + c0 + k];
          try {
            Rng rng = make_rng(config.seed, {epoch, index});
            ad::Tape tape;
            const ad::ParameterSet bound = state.params.bind(tape);
            const ad::Tensor loss = vsmc_objective({build(bound, index, length, rng)}, fc);
            tape.backward(loss);
            out[k].grads = bound.gradients(tape);
            out[k].objective = -loss.item();
          } catch (const std::domain_error& e) {
            out[k].error = "epoch " + std::to_string(epoch) + ", sequence " + std::to_string(index) + ": " + e.what();
          }
        });
        for (auto& o : out) {
          if (!o.error.empty()) {
            report.diverged = true;
            report.failure = o.error;
            break;
          }
          ad::accumulate(total, o.grads, 1.0 / static_cast<double>(config.batch_size));
          batch_objective += o.objective / static_cast<double>(config.batch_size);
        }
      }
      if (report.diverged) break;
      const double norm = ad::global_norm(total);
      if (!std::isfinite(norm)) {
        report.diverged = true;
        report.failure = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) + ": non-finite gradient";
        break;
      }
      if (config.max_grad_norm > 0.0 && norm > config.max_grad_norm) {
        for (auto& g : total) {
          for (auto& x : g) x *= config.max_grad_norm / norm;
        }
      }
      state.optimizer.step(state.params, total);
      objective_sum += batch_objective;
      norm_sum += norm;
    }
    if (report.diverged) break;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.length = length;
    rec.objective = objective_sum / static_cast<double>(batches);
    rec.grad_norm = norm_sum / static_cast<double>(batches);
    rec.val_error = validate ? validate(state.params) : std::numeric_limits<double>::quiet_NaN();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(rec);
    state.next_epoch = epoch + 1;
  }
  return report;
}

}  // namespace dvsmc::training
