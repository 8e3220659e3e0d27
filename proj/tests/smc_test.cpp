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
#include <filesystem>
#include <numbers>
#include <numeric>

#include "dvsmc/autodiff/ops.hpp"
#include "dvsmc/smc/ensemble.hpp"
#include "dvsmc/smc/filter.hpp"
#include "dvsmc/smc/resampling.hpp"
#include "gradcheck.hpp"
#include "linear_gaussian.hpp"

namespace dvsmc::smc {
namespace {

using ad::Tensor;
constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(WeightUpdate, BootstrapDensitiesCancel) {
  const Tensor prev = Tensor::vector({-0.3, 0.1});
  const Tensor ll = Tensor::vector({-4.0, -2.5});
  const Tensor dens = Tensor::vector({-1.7, 0.4});
  const Tensor w = weight_update(prev, ll, dens, dens);
  EXPECT_EQ(w[0], -0.3 + -4.0);
  EXPECT_EQ(w[1], 0.1 + -2.5);
}

TEST(WeightUpdate, ZeroTerms) {
  const Tensor z = Tensor::zeros({3});
  const Tensor w = weight_update(z, z, z, z);
  for (double v : w.data()) EXPECT_EQ(v, 0.0);
}

TEST(WeightUpdate, MatchesDirectSum) {
  std::mt19937_64 rng(2);
  const Tensor a = testing::random_tensor(rng, {50}, -50, 50), b = testing::random_tensor(rng, {50}, -50, 50),
               c = testing::random_tensor(rng, {50}, -50, 50), d = testing::random_tensor(rng, {50}, -50, 50);
  const Tensor w = weight_update(a, b, c, d);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(w[i], a[i] + b[i] + c[i] - d[i], 1e-12);
}

TEST(WeightUpdate, NamesNonFiniteTerm) {
  const Tensor z = Tensor::zeros({2});
  try {
    weight_update(z, Tensor::vector({0.0, NAN}), z, z);
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("log-likelihood"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("particle 1"), std::string::npos);
  }
}

TEST(Normalize, UniformEss) {
  const std::vector<double> lw(28, -3.0);
  const auto n = normalize_and_ess(lw);
  EXPECT_NEAR(n.ess, 28.0, 1e-12);
  EXPECT_NEAR(n.log_normalizer, -3.0, 1e-12);
  EXPECT_NEAR(std::accumulate(n.weights.begin(), n.weights.end(), 0.0), 1.0, 1e-12);
}

TEST(Normalize, DegenerateEss) {
  const auto n = normalize_and_ess(std::vector<double>{0.0, -kInf, -kInf, -kInf});
  EXPECT_EQ(n.ess, 1.0);
  EXPECT_EQ(n.weights, (std::vector<double>{1, 0, 0, 0}));
}

TEST(Normalize, HandEvaluatedEss) {
  const auto n = normalize_and_ess(std::vector<double>{std::log(0.5), std::log(0.25), std::log(0.25)});
  EXPECT_NEAR(n.ess, 8.0 / 3.0, 1e-12);
}

TEST(Normalize, TotalCollapseThrows) {
  EXPECT_THROW(normalize_and_ess(std::vector<double>{-kInf, -kInf}), std::domain_error);
  EXPECT_THROW(normalize_and_ess(std::vector<double>{0.0, NAN}), std::domain_error);
}

TEST(Normalize, ShiftConsistency) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-30, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> lw(10), shifted(10);
    const double c = u(rng) * 20;
    for (std::size_t i = 0; i < 10; ++i) shifted[i] = (lw[i] = u(rng)) + c;
    const auto a = normalize_and_ess(lw), b = normalize_and_ess(shifted);
    EXPECT_NEAR(b.log_normalizer - c, a.log_normalizer, 1e-9);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(a.weights[i], b.weights[i], 1e-12);
  }
}

TEST(Systematic, PointMass) {
  Rng rng(1);
  for (auto i : systematic_indices(std::vector<double>{1, 0, 0, 0}, rng)) EXPECT_EQ(i, 0u);
  for (auto i : systematic_indices(std::vector<double>{0, 0, 0, 1}, 0.2499999)) EXPECT_EQ(i, 3u);
}

TEST(Systematic, HandSimulatedComb) {
  const std::vector<double> w(4, 0.25);
  EXPECT_EQ(systematic_indices(w, 0.1 / 4), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Systematic, OffspringCountsAreUnbiased) {
  const std::vector<double> w{0.05, 0.3, 0.15, 0.02, 0.28, 0.2};
  const std::size_t n = w.size(), runs = 100000;
  std::vector<double> sum(n, 0.0), sq(n, 0.0);
  Rng rng(99);
  for (std::size_t r = 0; r < runs; ++r) {
    std::vector<double> count(n, 0.0);
    for (auto i : systematic_indices(w, rng)) count[i] += 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] += count[i];
      sq[i] += count[i] * count[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = sum[i] / runs;
    const double var = sq[i] / runs - mean * mean;
    EXPECT_NEAR(mean, static_cast<double>(n) * w[i], 3.0 * std::sqrt(var / runs) + 1e-12) << "particle " << i;
  }
}

TEST(Systematic, ResampledWeightsAreUniform) {
  Rng rng(5);
  const Ensemble e{Tensor({3, 1}, {1.0, 2.0, 3.0}), Tensor::vector({0.0, -1.0, 2.0})};
  const Ensemble r = systematic_resample(e, rng);
  for (double v : r.log_weights.data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(normalize_and_ess(r.log_weights.data()).ess, 3.0);
}

TEST(Sinkhorn, SingleParticle) {
  const auto ot = ot_resample(Ensemble::uniform(Tensor({1, 3}, {1.0, -2.0, 3.0})), {});
  EXPECT_NEAR(ot.transport.plan.item(), 1.0, 1e-15);
  EXPECT_EQ(std::vector<double>(ot.ensemble.particles.data().begin(), ot.ensemble.particles.data().end()),
            (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(Sinkhorn, IdenticalParticlesUniformPlan) {
  const std::size_t n = 5;
  const auto ot = ot_resample(Ensemble::uniform(Tensor::full({n, 2}, 1.5)), {});
  for (double v : ot.transport.plan.data()) EXPECT_NEAR(v, 1.0 / (n * n), 1e-15);
  for (double v : ot.ensemble.particles.data()) EXPECT_NEAR(v, 1.5, 1e-14);
}

Ensemble random_ensemble(std::mt19937_64& rng, std::size_t n, std::size_t d, double spread) {
  return {testing::random_tensor(rng, {n, d}, -spread, spread), testing::random_tensor(rng, {n}, -3.0, 3.0)};
}

TEST(Sinkhorn, MarginalsAndMeanArePreserved) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 28;
    const Ensemble e = random_ensemble(rng, n, 3, 20.0);
    const auto w = normalize_and_ess(e.log_weights.data()).weights;
    const auto ot = ot_resample(e, {});
    ASSERT_TRUE(ot.transport.converged);
    const auto p = ot.transport.plan.data();
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0, col = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row += p[i * n + j];
        col += p[j * n + i];
      }
      EXPECT_NEAR(row, w[i], 1e-6);
      EXPECT_NEAR(col, 1.0 / n, 1e-6);
    }
    for (std::size_t k = 0; k < 3; ++k) {
      double before = 0.0, after = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        before += w[i] * e.particles[i * 3 + k];
        after += ot.ensemble.particles[i * 3 + k] / n;
      }
      EXPECT_NEAR(after, before, 1e-6);
    }
    for (double v : ot.ensemble.log_weights.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Sinkhorn, DegenerateWeightsCollapseOntoSurvivor) {
  const Ensemble e{Tensor({3, 1}, {0.0, 5.0, 10.0}), Tensor::vector({-kInf, 0.0, -kInf})};
  const auto ot = ot_resample(e, {});
  for (double v : ot.ensemble.particles.data()) EXPECT_NEAR(v, 5.0, 1e-9);
}

TEST(Sinkhorn, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(12);
  SinkhornConfig cfg;
  cfg.tolerance = 0.0;
  cfg.max_iterations = 40;
  for (int trial = 0; trial < 10; ++trial) {
    const Ensemble e = random_ensemble(rng, 5, 2, 3.0);
    const double err = testing::gradient_error(
        [&](const auto& in) { return testing::project(ot_resample({in[0], in[1]}, cfg).ensemble.particles, 3); },
        {e.particles, e.log_weights});
    EXPECT_LT(err, 1e-4);
  }
}

StepModel constant_likelihood_model(double sharpness) {
  testing::LinearGaussian m;
  StepModel model = testing::bootstrap_model(m, {0.0});
  model.log_likelihood = [sharpness](const Tensor& z, std::size_t) {
    return ad::reshape(ad::square(z) * -sharpness, {z.dim(0)});
  };
  return model;
}

TEST(FilterStep, NoResampleAboveThreshold) {
  Rng rng(3);
  const auto cfg = FilterConfig::with_particles(10);
  const StepModel flat = constant_likelihood_model(0.0);
  const auto r = filter_step(Ensemble::uniform(Tensor::zeros({10, 1})), flat, 0, cfg, rng);
  EXPECT_FALSE(r.resampled);
  EXPECT_NEAR(r.ess, 10.0, 1e-12);
}

TEST(FilterStep, ResampleResetsWeights) {
  Rng rng(3);
  for (auto kind : {Resampler::kSystematic, Resampler::kOptimalTransport}) {
    const auto cfg = FilterConfig::with_particles(10, kind);
    const auto r = filter_step(Ensemble::uniform(Tensor::zeros({10, 1})), constant_likelihood_model(50.0), 0, cfg, rng);
    EXPECT_TRUE(r.resampled);
    EXPECT_LT(r.ess, 5.0);
    for (double v : r.ensemble.log_weights.data()) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(normalize_and_ess(r.ensemble.log_weights.data()).ess, 10.0);
  }
}

TEST(FilterStep, TwoParticleEvidenceMatchesHandComputation) {
  // Proposal N(prev + 0.5, 2), transition N(0.9 prev, 1), likelihood N(y; z, 0.5), y = 0.7.
  const double a = 0.9, q = 1.0, r = 0.5, y = 0.7, shift = 0.5, s2 = 2.0;
  const std::vector<double> prev{-0.4, 1.1}, prev_lw{std::log(1.2), std::log(0.8)};  // weights 0.6, 0.4
  StepModel model = testing::bootstrap_model({a, q, r, 0.0, 1.0}, {y});
  model.proposal = [&](const Tensor& p, std::size_t) {
    return dist::single_gaussian(p + shift, Tensor::full(p.shape(), std::log(s2)));
  };
  Rng rng(2024);
  const auto step =
      filter_step({Tensor({2, 1}, prev), Tensor::vector(prev_lw)}, model, 0, FilterConfig::with_particles(2), rng);
  // Replay the same stream: per particle one uniform (component), one normal.
  Rng draws(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  long double total = 0.0L;
  auto log_normal = [](long double x, long double m, long double v) {
    return -0.5L * std::log(2.0L * std::numbers::pi_v<long double> * v) - (x - m) * (x - m) / (2.0L * v);
  };
  for (int i = 0; i < 2; ++i) {
    u(draws);
    const long double z = prev[i] + shift + std::sqrt(2.0L) * g(draws);
    const long double lw = log_normal(y, z, r) + log_normal(z, a * prev[i], q) - log_normal(z, prev[i] + shift, s2);
    total += std::exp(static_cast<long double>(prev_lw[i]) + lw);
  }
  EXPECT_NEAR(step.increment.item(), static_cast<double>(std::log(total / 2.0L)), 1e-10);
}

TEST(RunFilter, SingleStepEqualsFilterStep) {
  testing::LinearGaussian m;
  const auto ys = testing::simulate(m, 1, 5);
  const auto cfg = FilterConfig::with_particles(16);
  std::mt19937_64 init_rng(1);
  const Ensemble init = testing::prior_ensemble(m, 16, init_rng);
  Rng a(7), b(7);
  const auto run = run_filter(1, testing::bootstrap_model(m, ys), cfg, init, a);
  const auto step = filter_step(init, testing::bootstrap_model(m, ys), 0, cfg, b);
  EXPECT_EQ(run.log_evidence.item(), step.increment.item());
  EXPECT_EQ(run.trace.weights[0], step.weights);
}

TEST(RunFilter, CumulativeIsRunningSum) {
  testing::LinearGaussian m;
  const auto ys = testing::simulate(m, 30, 6);
  std::mt19937_64 init_rng(1);
  Rng rng(8);
  const auto run = run_filter(30, testing::bootstrap_model(m, ys), FilterConfig::with_particles(64),
                              testing::prior_ensemble(m, 64, init_rng), rng);
  double acc = 0.0;
  for (std::size_t t = 0; t < 30; ++t) {
    acc += run.trace.increments[t];
    EXPECT_DOUBLE_EQ(run.trace.cumulative[t], acc);
  }
  EXPECT_NEAR(run.log_evidence.item(), acc, 1e-9);
}

TEST(RunFilter, PostResamplingWeightsAreUniform) {
  testing::LinearGaussian m;
  m.r = 0.05;
  const auto ys = testing::simulate(m, 40, 9);
  std::mt19937_64 init_rng(2);
  Rng rng(3);
  const auto cfg = FilterConfig::with_particles(32);
  Ensemble e = testing::prior_ensemble(m, 32, init_rng);
  int events = 0;
  for (std::size_t t = 0; t < 40; ++t) {
    auto step = filter_step(e, testing::bootstrap_model(m, ys), t, cfg, rng);
    if (step.resampled) {
      ++events;
      for (double v : step.ensemble.log_weights.data()) EXPECT_EQ(v, 0.0);
    }
    e = step.ensemble;
  }
  EXPECT_GT(events, 0);
}

TEST(RunFilter, BootstrapEvidenceMatchesKalman) {
  testing::LinearGaussian m;
  const std::size_t steps = 20, n = 10000, seeds = 50;
  const auto ys = testing::simulate(m, steps, 77);
  std::vector<double> est;
  for (std::size_t s = 0; s < seeds; ++s) {
    Rng rng(s);
    est.push_back(run_filter(steps, testing::bootstrap_model(m, ys), FilterConfig::with_particles(n),
                             testing::prior_ensemble(m, n, rng), rng)
                      .log_evidence.item());
  }
  const double mean = std::accumulate(est.begin(), est.end(), 0.0) / seeds;
  // Bootstrap standard deviation of the seed mean.
  Rng boot(1);
  std::uniform_int_distribution<std::size_t> pick(0, seeds - 1);
  std::vector<double> means;
  for (int b = 0; b < 2000; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < seeds; ++i) acc += est[pick(boot)];
    means.push_back(acc / seeds);
  }
  const double bm = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
  double var = 0.0;
  for (double v : means) var += (v - bm) * (v - bm);
  const double sd = std::sqrt(var / (means.size() - 1));
  EXPECT_NEAR(mean, testing::kalman_log_evidence(m, ys), 3.0 * sd);
}

TEST(RunFilter, DoublingParticlesDoesNotLowerMeanEvidence) {
  testing::LinearGaussian m;
  m.r = 0.1;
  const std::size_t steps = 50, seeds = 50;
  double last = -kInf;
  for (std::size_t n : {4, 8, 16, 32, 64}) {
    double acc = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      const auto ys = testing::simulate(m, steps, 1000 + s);
      Rng rng(derive_seed(s, {n}));
      acc += run_filter(steps, testing::bootstrap_model(m, ys), FilterConfig::with_particles(n),
                        testing::prior_ensemble(m, n, rng), rng)
                 .log_evidence.item();
    }
    EXPECT_GE(acc / seeds, last) << "N=" << n;
    last = acc / seeds;
  }
}

// Proposal N(c0 prev + c1 y + c2, exp(c3)) with trainable c.
StepModel parametric_model(const testing::LinearGaussian& m, const std::vector<double>& ys, const Tensor& c) {
  StepModel model = testing::bootstrap_model(m, ys);
  model.proposal = [c, ys](const Tensor& prev, std::size_t t) {
    const std::size_t n = prev.dim(0);
    const Tensor c0 = ad::slice(c, 0, 0, 1), c1 = ad::slice(c, 0, 1, 2), c2 = ad::slice(c, 0, 2, 3),
                 c3 = ad::slice(c, 0, 3, 4);
    const Tensor mean = prev * c0 + c1 * ys[t] + c2;
    return dist::single_gaussian(mean, ad::reshape(c3, {1, 1}) + Tensor::zeros({n, 1}));
  };
  return model;
}

TEST(RunFilter, EvidenceGradientThroughTransportMatchesFiniteDifferences) {
  testing::LinearGaussian m;
  const auto ys = testing::simulate(m, 3, 31);
  FilterConfig cfg = FilterConfig::with_particles(4, Resampler::kOptimalTransport);
  cfg.ess_threshold = 4.0;
  cfg.sinkhorn.tolerance = 0.0;
  const Tensor c = Tensor::vector({0.6, 0.3, 0.1, -0.2});
  std::mt19937_64 init_rng(4);
  const Ensemble init = testing::prior_ensemble(m, 4, init_rng);
  const double err = testing::gradient_error(
      [&](const auto& in) {
        Rng rng(11);
        return run_filter(3, parametric_model(m, ys, in[0]), cfg, init, rng).log_evidence;
      },
      {c});
  EXPECT_LT(err, 1e-3);
}

TEST(FilterTrace, ArchiveRoundTrip) {
  testing::LinearGaussian m;
  const auto ys = testing::simulate(m, 5, 1);
  std::mt19937_64 init_rng(1);
  Rng rng(2);
  const auto run = run_filter(5, testing::bootstrap_model(m, ys), FilterConfig::with_particles(8),
                              testing::prior_ensemble(m, 8, init_rng), rng);
  const auto path = std::filesystem::temp_directory_path() / "dvsmc_trace_test.bin";
  save_trace(run.trace, path, {{"method", "bpf"}});
  const FilterTrace back = load_trace(path);
  EXPECT_EQ(back.states, run.trace.states);
  EXPECT_EQ(back.weights, run.trace.weights);
  EXPECT_EQ(back.cumulative, run.trace.cumulative);
  EXPECT_EQ(back.resampled, run.trace.resampled);
  EXPECT_EQ(io::Archive::load(path).meta.at("method"), "bpf");
  std::filesystem::remove(path);
}

TEST(FilterConfig, RejectsBadThreshold) {
  FilterConfig c = FilterConfig::with_particles(10);
  c.ess_threshold = 11.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.ess_threshold = 0.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace dvsmc::smc
