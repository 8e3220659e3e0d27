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


#include "dvsmc/training/dpf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dvsmc/autodiff/ops.hpp"
#include "dvsmc/util/parallel.hpp"

namespace dvsmc::training {

ProblemBuilder dpf_problem_builder(const ssm::Dataset& dataset, const models::NetworkConfig& network,
                                   std::size_t particles, InitSampler init) {
  if (!init) throw std::invalid_argument("dpf_problem_builder: missing initial sampler");
  return [&dataset, network, particles, init](const ad::ParameterSet& bound, std::size_t index, std::size_t length,
                                              Rng& rng) {
    const ssm::Trajectory& seq = dataset.sequences.at(index);
    if (length == 0 || length > seq.length()) {
      throw std::invalid_argument("dpf_problem_builder: window of " + std::to_string(length) +
                                  " does not fit sequence " + std::to_string(index));
    }
    std::uniform_int_distribution<std::size_t> offset_dist(0, seq.length() - length);
    const std::size_t offset = offset_dist(rng);
    const std::vector<ssm::ObservationFrame> frames(seq.frames.begin() + offset,
                                                    seq.frames.begin() + offset + length);
    SequenceProblem p;
    p.model = models::dpf_step_model(bound, network, frames, seq.sigma_v);
    p.init = smc::Ensemble::uniform(init(particles, rng));
    p.steps = length;
    p.seed = rng();
    return p;
  };
}

ad::Tensor supervised_loss(const ad::ParameterSet& params, const models::NetworkConfig& network,
                           const ssm::Trajectory& sequence) {
  const std::size_t n = sequence.length(), d = network.state_dim;
  std::vector<double> truth;
  truth.reserve(n * d);
  for (const auto& s : sequence.states) truth.insert(truth.end(), s.begin(), s.begin() + d);
  const ad::Tensor pred = models::supervised_predict(params, network, models::encoder_input(sequence.frames));
  // The small offset keeps the gradient finite at a perfect prediction.
  const ad::Tensor dist = ad::sqrt(ad::sum(ad::square(pred - ad::Tensor({n, d}, std::move(truth))), 1) + 1e-12);
  return ad::mean(dist);
}

TrainReport train_supervised(TrainState& state, const models::NetworkConfig& network, const ssm::Dataset& dataset,
                             const TrainConfig& config, const Validator& validate) {
  const std::size_t size = dataset.sequences.size();
  if (config.batch_size == 0 || size % config.batch_size != 0) {
    throw std::invalid_argument("train_supervised: batch size must divide the dataset size");
  }
  const std::size_t batches = size / config.batch_size;
  const std::size_t chunk = std::max<std::size_t>(1, thread_count());
  TrainReport report;
  for (std::size_t epoch = state.next_epoch; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = make_rng(config.seed, {epoch, 0x535550ULL});
    std::shuffle(order.begin(), order.end(), shuffle);
    double loss_sum = 0.0, norm_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      ad::Gradients total = state.params.zero_gradients();
      double batch_loss = 0.0;
      for (std::size_t c0 = 0; c0 < config.batch_size; c0 += chunk) {
        const std::size_t count = std::min(chunk, config.batch_size - c0);
        std::vector<ad::Gradients> grads(count);
        std::vector<double> losses(count);
        parallel_for(count, [&](std::size_t k) {
          ad::Tape tape;
          const ad::ParameterSet bound = state.params.bind(tape);
          const ad::Tensor loss =
              supervised_loss(bound, network, dataset.sequences[order[b * config.batch_size + c0 + k]]);
          tape.backward(loss);
          grads[k] = bound.gradients(tape);
          losses[k] = loss.item();
        });
        for (std::size_t k = 0; k < count; ++k) {
          ad::accumulate(total, grads[k], 1.0 / static_cast<double>(config.batch_size));
          batch_loss += losses[k] / static_cast<double>(config.batch_size);
        }
      }
      const double norm = ad::global_norm(total);
      if (!std::isfinite(norm) || !std::isfinite(batch_loss)) {
        report.diverged = true;
        report.failure = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) + ": non-finite loss";
        return report;
      }
      if (config.max_grad_norm > 0.0 && norm > config.max_grad_norm) {
        for (auto& g : total) {
          for (auto& x : g) x *= config.max_grad_norm / norm;
        }
      }
      state.optimizer.step(state.params, total);
      loss_sum += batch_loss;
      norm_sum += norm;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.length = dataset.sequences.empty() ? 0 : dataset.sequences.front().length();
    rec.objective = loss_sum / static_cast<double>(batches);
    rec.grad_norm = norm_sum / static_cast<double>(batches);
    rec.val_error = validate ? validate(state.params) : std::numeric_limits<double>::quiet_NaN();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(rec);
    state.next_epoch = epoch + 1;
  }
  return report;
}

}  // namespace dvsmc::training
