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


#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "dvsmc/autodiff/ops.hpp"
#include "dvsmc/training/vsmc.hpp"
#include "linear_gaussian.hpp"

namespace dvsmc::training {
namespace {

using ad::Tensor;

// Proposal N(c0 prev + c1 y + c2, exp(c3)).
smc::StepModel parametric_model(const testing::LinearGaussian& m, const std::vector<double>& ys, const Tensor& c) {
  smc::StepModel model = testing::bootstrap_model(m, ys);
  model.proposal = [c, ys](const Tensor& prev, std::size_t t) {
    const std::size_t n = prev.dim(0);
    const Tensor mean = prev * ad::slice(c, 0, 0, 1) + ad::slice(c, 0, 1, 2) * ys[t] + ad::slice(c, 0, 2, 3);
    return dist::single_gaussian(mean, ad::reshape(ad::slice(c, 0, 3, 4), {1, 1}) + Tensor::zeros({n, 1}));
  };
  return model;
}

smc::FilterConfig ot_config(std::size_t n) {
  return smc::FilterConfig::with_particles(n, smc::Resampler::kOptimalTransport);
}

long double log_normal(long double x, long double m, long double v) {
  return -0.5L * std::log(2.0L * std::numbers::pi_v<long double> * v) - (x - m) * (x - m) / (2.0L * v);
}

TEST(Objective, SingleParticleSingleStepCollapses) {
  const testing::LinearGaussian m;
  const std::vector<double> ys{0.4};
  const Tensor c = Tensor::vector({0.5, 0.2, 0.1, std::log(0.7)});
  SequenceProblem p{parametric_model(m, ys, c), smc::Ensemble::uniform(Tensor({1, 1}, {0.3})), 1, 99};
  const double loss = vsmc_objective({p}, ot_config(1)).item();

  Rng draws(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  u(draws);
  const long double mean = 0.5L * 0.3L + 0.2L * 0.4L + 0.1L;
  const long double z = mean + std::sqrt(0.7L) * g(draws);
  const long double expected = log_normal(0.4L, z, m.r) + log_normal(z, m.a * 0.3L, m.q) - log_normal(z, mean, 0.7L);
  EXPECT_NEAR(loss, -static_cast<double>(expected), 1e-12);
}

TEST(Objective, IdenticalBatchEqualsSingleSequence) {
  const testing::LinearGaussian m;
  const auto ys = testing::simulate(m, 5, 3);
  const Tensor c = Tensor::vector({0.6, 0.3, 0.0, 0.0});
  Rng init_rng(1);
  SequenceProblem p{parametric_model(m, ys, c), testing::prior_ensemble(m, 8, init_rng), 5, 17};
  const double single = vsmc_objective({p}, ot_config(8)).item();
  const double batch = vsmc_objective({p, p, p, p}, ot_config(8)).item();
  EXPECT_NEAR(batch, single, 1e-12);
}

TEST(Objective, TwoParticleTwoStepMatchesHandComputation) {
  const testing::LinearGaussian m;
  const std::vector<double> ys{0.8, -0.3};
  const double c0 = 0.7, c1 = 0.25, c2 = -0.1, v = 0.6;
  const Tensor c = Tensor::vector({c0, c1, c2, std::log(v)});
  const std::vector<double> init{-0.5, 0.9};
  // Threshold 1 keeps N = 2 from resampling, so weights carry over.
  SequenceProblem p{parametric_model(m, ys, c), smc::Ensemble::uniform(Tensor({2, 1}, init)), 2, 4242};
  const double loss = vsmc_objective({p}, ot_config(2)).item();

  Rng draws(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  long double prev[2] = {init[0], init[1]}, logw[2] = {0.0L, 0.0L}, evidence = 0.0L;
  for (int t = 0; t < 2; ++t) {
    long double next[2], inc[2];
    for (int i = 0; i < 2; ++i) {
      u(draws);
      const long double mean = c0 * prev[i] + c1 * ys[t] + c2;
      next[i] = mean + std::sqrt(static_cast<long double>(v)) * g(draws);
      inc[i] = log_normal(ys[t], next[i], m.r) + log_normal(next[i], m.a * prev[i], m.q) -
               log_normal(next[i], mean, v);
    }
    const long double norm = std::exp(logw[0]) + std::exp(logw[1]);
    const long double total = std::exp(logw[0] + inc[0]) + std::exp(logw[1] + inc[1]);
    evidence += std::log(total / norm);
    for (int i = 0; i < 2; ++i) {
      logw[i] += inc[i];
      prev[i] = next[i];
    }
  }
  EXPECT_NEAR(loss, -static_cast<double>(evidence), 1e-10);
}

TEST(Objective, InvariantToBatchOrder) {
  const testing::LinearGaussian m;
  const Tensor c = Tensor::vector({0.6, 0.3, 0.0, 0.0});
  std::vector<SequenceProblem> batch;
  for (std::uint64_t s = 0; s < 6; ++s) {
    Rng init_rng(s);
    batch.push_back({parametric_model(m, testing::simulate(m, 6, s), c), testing::prior_ensemble(m, 8, init_rng), 6,
                     100 + s});
  }
  const double forward = vsmc_objective(batch, ot_config(8)).item();
  std::reverse(batch.begin(), batch.end());
  EXPECT_NEAR(vsmc_objective(batch, ot_config(8)).item(), forward, 1e-12);
}

TEST(Objective, RequiresTransportResampler) {
  const testing::LinearGaussian m;
  Rng init_rng(1);
  SequenceProblem p{testing::bootstrap_model(m, {0.1}), testing::prior_ensemble(m, 4, init_rng), 1, 0};
  EXPECT_THROW(vsmc_objective({p}, smc::FilterConfig::with_particles(4)), std::invalid_argument);
}

TEST(Objective, NonFiniteNamesSequence) {
  const testing::LinearGaussian m;
  Rng init_rng(1);
  const auto init = testing::prior_ensemble(m, 4, init_rng);
  SequenceProblem good{testing::bootstrap_model(m, {0.1}), init, 1, 0};
  SequenceProblem bad = good;
  bad.model.log_likelihood = [](const Tensor& z, std::size_t) {
    return Tensor::full({z.dim(0)}, std::numeric_limits<double>::quiet_NaN());
  };
  try {
    vsmc_objective({good, bad}, ot_config(4));
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("sequence 1"), std::string::npos) << e.what();
  }
}

TEST(Objective, MeanIsBelowExactEvidence) {
  const testing::LinearGaussian m;
  const auto ys = testing::simulate(m, 10, 8);
  const double exact = testing::kalman_log_evidence(m, ys);
  const Tensor c = Tensor::vector({0.0, 0.0, 0.0, 0.0});
  std::vector<double> est;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng init_rng(s);
    SequenceProblem p{parametric_model(m, ys, c), testing::prior_ensemble(m, 16, init_rng), 10, 5000 + s};
    est.push_back(-vsmc_objective({p}, ot_config(16)).item());
  }
  const double mean = std::accumulate(est.begin(), est.end(), 0.0) / est.size();
  double var = 0.0;
  for (double v : est) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (est.size() - 1) / est.size());
  EXPECT_LE(mean, exact + 3.0 * se);
}

// Toy dataset: 16 sequences of length 8 with trainable proposal "c".
struct Toy {
  testing::LinearGaussian m;
  std::vector<std::vector<double>> data;
  std::size_t particles = 16;

  Toy() {
    for (std::uint64_t s = 0; s < 16; ++s) data.push_back(testing::simulate(m, 8, 300 + s));
  }

  ProblemBuilder builder() const {
    return [this](const ad::ParameterSet& bound, std::size_t index, std::size_t length, Rng& rng) {
      SequenceProblem p{parametric_model(m, data[index], bound.at("c")), testing::prior_ensemble(m, particles, rng),
                        length, rng()};
      return p;
    };
  }

  // Mean objective over the dataset at full length under fixed streams.
  double evaluate(const ad::ParameterSet& params) const {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      Rng rng = make_rng(77, {i});
      const auto p = builder()(params, i, 8, rng);
      total -= vsmc_objective({p}, ot_config(particles)).item();
    }
    return total / static_cast<double>(data.size());
  }
};

ad::ParameterSet toy_params() {
  ad::ParameterSet params;
  params.add("c", Tensor::vector({0.0, 0.0, 0.0, 0.0}));
  return params;
}

TrainConfig toy_config(std::size_t epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.05;
  cfg.weight_decay = 0.0;
  cfg.particles = 16;
  cfg.seed = 5;
  return cfg;
}

TEST(Train, ZeroEpochsKeepsInitialization) {
  const Toy toy;
  TrainState state = initial_state(toy_params(), toy_config(0));
  const auto report = train(state, toy.data.size(), toy.builder(), toy_config(0));
  EXPECT_TRUE(report.epochs.empty());
  EXPECT_EQ(state.params.at("c").data()[0], 0.0);
  EXPECT_EQ(state.next_epoch, 0u);
}

TEST(Train, ImprovesObjectiveOnToy) {
  const Toy toy;
  const auto cfg = toy_config(50);
  TrainState state = initial_state(toy_params(), cfg);
  const double before = toy.evaluate(state.params);
  const auto report = train(state, toy.data.size(), toy.builder(), cfg);
  ASSERT_FALSE(report.diverged) << report.failure;
  ASSERT_EQ(report.epochs.size(), 50u);
  const double after = toy.evaluate(state.params);
  EXPECT_GT(after, before + 1.0) << "before " << before << " after " << after;
  EXPECT_EQ(report.epochs.front().length, 2u);
  EXPECT_EQ(report.epochs.back().length, 8u);
}

TEST(Train, DeterministicAndResumable) {
  const Toy toy;
  auto cfg = toy_config(6);
  cfg.curriculum = {{0, 2}, {2, 4}, {4, 8}};
  TrainState a = initial_state(toy_params(), cfg);
  TrainState b = initial_state(toy_params(), cfg);
  const auto ra = train(a, toy.data.size(), toy.builder(), cfg);
  auto half = cfg;
  half.epochs = 3;
  train(b, toy.data.size(), toy.builder(), half);
  const auto rb = train(b, toy.data.size(), toy.builder(), cfg);
  ASSERT_EQ(rb.epochs.size(), 3u);
  EXPECT_EQ(rb.epochs.front().epoch, 3u);
  EXPECT_EQ(a.params.at("c").data()[0], b.params.at("c").data()[0]);
  EXPECT_EQ(a.params.at("c").data()[3], b.params.at("c").data()[3]);
  EXPECT_EQ(ra.epochs.back().objective, rb.epochs.back().objective);
}

TEST(Train, DivergenceKeepsLastGoodParameters) {
  const Toy toy;
  const auto cfg = toy_config(3);
  TrainState state = initial_state(toy_params(), cfg);
  const auto base = toy.builder();
  const ProblemBuilder build = [&](const ad::ParameterSet& bound, std::size_t index, std::size_t length, Rng& rng) {
    auto p = base(bound, index, length, rng);
    if (index == 5) {
      p.model.log_likelihood = [](const Tensor& z, std::size_t) {
        return Tensor::full({z.dim(0)}, std::numeric_limits<double>::quiet_NaN());
      };
    }
    return p;
  };
  const auto report = train(state, toy.data.size(), build, cfg);
  EXPECT_TRUE(report.diverged);
  EXPECT_NE(report.failure.find("sequence 5"), std::string::npos) << report.failure;
  EXPECT_TRUE(report.epochs.empty());
  for (double v : state.params.at("c").data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_THROW(cfg.validate(1000), std::invalid_argument);
  EXPECT_NO_THROW(cfg.validate(1024));
  cfg.curriculum = {{0, 4}, {10, 2}};
  EXPECT_THROW(cfg.validate(1024), std::invalid_argument);
  cfg.curriculum.clear();
  EXPECT_EQ(cfg.length_at(0), 2u);
  EXPECT_EQ(cfg.length_at(15), 2u);
  EXPECT_EQ(cfg.length_at(16), 4u);
  EXPECT_EQ(cfg.length_at(32), 4u);
  EXPECT_EQ(cfg.length_at(33), 8u);
}

}  // namespace
}  // namespace dvsmc::training
