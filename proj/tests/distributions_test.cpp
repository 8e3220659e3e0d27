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
#include <random>

#include "dvsmc/autodiff/ops.hpp"
#include "dvsmc/distributions/gaussian.hpp"
#include "dvsmc/distributions/gmm.hpp"
#include "dvsmc/distributions/kde.hpp"
#include "gradcheck.hpp"

namespace dvsmc::dist {
namespace {

using ad::Tensor;

GmmParams make_gmm(std::vector<double> logits, std::vector<double> means, std::vector<double> log_vars,
                   std::size_t k, std::size_t d) {
  const std::size_t n = logits.size() / k;
  return {Tensor({n, k}, std::move(logits)), Tensor({n, k, d}, std::move(means)),
          Tensor({n, k, d}, std::move(log_vars))};
}

TEST(GmmLogPdf, StandardNormalAtZero) {
  const auto p = make_gmm({0.0}, {0.0}, {0.0}, 1, 1);
  EXPECT_NEAR(gmm_log_pdf(p, Tensor({1, 1}, {0.0})).item(), -0.918939, 1e-6);
}

TEST(GmmLogPdf, IdenticalComponentsCollapse) {
  const auto one = make_gmm({0.0}, {0.3, -1.0}, {0.2, -0.4}, 1, 2);
  const auto two = make_gmm({0.0, 0.0}, {0.3, -1.0, 0.3, -1.0}, {0.2, -0.4, 0.2, -0.4}, 2, 2);
  const Tensor x({1, 2}, {0.7, 0.1});
  EXPECT_NEAR(gmm_log_pdf(one, x).item(), gmm_log_pdf(two, x).item(), 1e-14);
}

TEST(GmmLogPdf, MatchesLinearDomainSum) {
  std::mt19937_64 rng(3);
  const std::size_t n = 5, k = 3, d = 2;
  const Tensor raw = testing::random_tensor(rng, {n, gmm_raw_size(k, d)}, -1.5, 1.5);
  const Tensor x = testing::random_tensor(rng, {n, d}, -2.0, 2.0);
  const GmmParams p = parse_gmm(raw, k, d);
  const Tensor got = gmm_log_pdf(p, x);
  for (std::size_t i = 0; i < n; ++i) {
    long double z = 0.0L, acc = 0.0L;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(static_cast<long double>(p.logits[i * k + c]));
    for (std::size_t c = 0; c < k; ++c) {
      long double dens = std::exp(static_cast<long double>(p.logits[i * k + c])) / z;
      for (std::size_t j = 0; j < d; ++j) {
        const long double var = std::exp(static_cast<long double>(p.log_variances[(i * k + c) * d + j]));
        const long double r = x[i * d + j] - static_cast<long double>(p.means[(i * k + c) * d + j]);
        dens *= std::exp(-r * r / (2 * var)) / std::sqrt(2 * std::numbers::pi_v<long double> * var);
      }
      acc += dens;
    }
    EXPECT_NEAR(got[i], static_cast<double>(std::log(acc)), 1e-10);
  }
}

TEST(GmmLogPdf, IntegratesToOne) {
  const auto p = make_gmm({0.4, -0.2}, {-1.0, 0.5, 1.5, -0.5}, {-0.5, 0.0, 0.3, -1.0}, 2, 2);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  const std::size_t m = 200000;
  std::vector<double> pts(2 * m);
  for (auto& v : pts) v = u(rng);
  const GmmParams batch{ad::gather(p.logits, 0, std::vector<std::size_t>(m, 0)),
                        ad::gather(p.means, 0, std::vector<std::size_t>(m, 0)),
                        ad::gather(p.log_variances, 0, std::vector<std::size_t>(m, 0))};
  const Tensor lp = gmm_log_pdf(batch, Tensor({m, 2}, pts));
  double acc = 0.0;
  for (double v : lp.data()) acc += std::exp(v);
  EXPECT_NEAR(acc / static_cast<double>(m) * 400.0, 1.0, 0.02);
}

TEST(GmmLogPdf, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor raw = testing::random_tensor(rng, {4, gmm_raw_size(2, 3)}, -2.0, 2.0);
    const Tensor x = testing::random_tensor(rng, {4, 3}, -2.0, 2.0);
    const double err = testing::gradient_error(
        [](const auto& in) { return testing::project(gmm_log_pdf(parse_gmm(in[0], 2, 3), in[1]), 5); }, {raw, x});
    EXPECT_LT(err, 1e-4);
  }
}

TEST(GmmLogPdf, ClampsLogVariance) {
  const auto wide = make_gmm({0.0}, {0.0}, {9.0}, 1, 1);
  const auto capped = make_gmm({0.0}, {0.0}, {kMaxLogVariance}, 1, 1);
  const Tensor x({1, 1}, {0.5});
  EXPECT_EQ(gmm_log_pdf(wide, x).item(), gmm_log_pdf(capped, x).item());
}

TEST(GmmParse, RoundTrips) {
  std::mt19937_64 rng(1);
  const Tensor raw = testing::random_tensor(rng, {6, gmm_raw_size(2, 3)}, -20.0, 20.0);
  const Tensor back = flatten_gmm(parse_gmm(raw, 2, 3));
  EXPECT_EQ(std::vector<double>(back.data().begin(), back.data().end()),
            std::vector<double>(raw.data().begin(), raw.data().end()));
  EXPECT_THROW(parse_gmm(raw, 3, 3), ad::ShapeError);
}

TEST(GmmSample, DegenerateComponentReturnsMean) {
  const auto p = make_gmm({0.0}, {1.5, -2.0}, {kMinLogVariance, kMinLogVariance}, 1, 2);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto s = gmm_sample(p, rng);
    EXPECT_NEAR(s.values[0], 1.5, 6.0 * std::exp(-5.0));
    EXPECT_NEAR(s.values[1], -2.0, 6.0 * std::exp(-5.0));
  }
}

TEST(GmmSample, ComponentFrequenciesFollowWeights) {
  const std::size_t m = 100000;
  std::vector<double> logits;
  for (std::size_t i = 0; i < m; ++i) {
    logits.push_back(std::log(0.3));
    logits.push_back(std::log(0.7));
  }
  GmmParams p{Tensor({m, 2}, logits), Tensor::zeros({m, 2, 1}), Tensor::zeros({m, 2, 1})};
  Rng rng(4);
  const auto s = gmm_sample(p, rng);
  double first = 0.0;
  for (auto c : s.components) first += c == 0 ? 1.0 : 0.0;
  const double sd = std::sqrt(0.3 * 0.7 / static_cast<double>(m));
  EXPECT_NEAR(first / static_cast<double>(m), 0.3, 3.0 * sd);
}

TEST(GmmSample, MeanOfUnitGaussian) {
  const std::size_t m = 100000;
  const auto p = single_gaussian(Tensor::full({m, 1}, 2.0), Tensor::zeros({m, 1}));
  Rng rng(8);
  const auto s = gmm_sample(p, rng);
  double acc = 0.0;
  for (double v : s.values.data()) acc += v;
  EXPECT_NEAR(acc / static_cast<double>(m), 2.0, 3.0 / std::sqrt(static_cast<double>(m)));
}

double normal_cdf(double x, double mu, double sd) { return 0.5 * std::erfc(-(x - mu) / (sd * std::sqrt(2.0))); }

TEST(GmmSample, HistogramMatchesDensity) {
  // Chi-square against the exact mixture CDF: 20 interior bins plus two tails.
  const std::size_t m = 50000;
  const double w0 = 1.0 / (1.0 + std::exp(0.8)), mu0 = -1.0, mu1 = 2.0, sd0 = std::exp(-0.25), sd1 = 1.0;
  std::vector<double> logits, means, lvs;
  for (std::size_t i = 0; i < m; ++i) {
    logits.insert(logits.end(), {0.0, 0.8});
    means.insert(means.end(), {mu0, mu1});
    lvs.insert(lvs.end(), {-0.5, 0.0});
  }
  const auto p = make_gmm(logits, means, lvs, 2, 1);
  Rng rng(12);
  const auto s = gmm_sample(p, rng);
  const double lo = -4.0, hi = 5.0;
  const int bins = 20;
  std::vector<double> counts(bins + 2, 0.0);
  for (double v : s.values.data()) {
    const int b = v < lo ? 0 : v >= hi ? bins + 1 : 1 + static_cast<int>((v - lo) / (hi - lo) * bins);
    counts[std::min(b, bins + 1)] += 1.0;
  }
  auto cdf = [&](double x) { return w0 * normal_cdf(x, mu0, sd0) + (1 - w0) * normal_cdf(x, mu1, sd1); };
  double chi2 = 0.0;
  for (int b = 0; b < bins + 2; ++b) {
    const double a = b == 0 ? -INFINITY : lo + (b - 1) * (hi - lo) / bins;
    const double z = b == bins + 1 ? INFINITY : lo + b * (hi - lo) / bins;
    const double expected = (cdf(z) - cdf(a)) * static_cast<double>(m);
    chi2 += (counts[b] - expected) * (counts[b] - expected) / expected;
  }
  EXPECT_LT(chi2, 40.29);  // 0.99 quantile at 21 dof
}

TEST(GmmSample, PathwiseGradientReachesChosenComponentOnly) {
  const auto p = make_gmm({0.0, 0.0}, {1.0, 5.0}, {0.0, 0.0}, 2, 1);
  ad::Tape tape;
  const GmmParams bound{tape.watch(p.logits), tape.watch(p.means), tape.watch(p.log_variances)};
  const std::vector<double> u{0.9}, eps{0.5};
  const auto s = gmm_sample(bound, u, eps);
  ASSERT_EQ(s.components[0], 1u);
  EXPECT_DOUBLE_EQ(s.values.item(), 5.5);
  tape.backward(ad::sum(s.values));
  EXPECT_EQ(tape.grad(bound.means), (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(tape.grad(bound.logits), (std::vector<double>{0.0, 0.0}));
  EXPECT_DOUBLE_EQ(tape.grad(bound.log_variances)[1], 0.25);
}

TEST(GmmSample, PinnedDrawGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(23);
  const std::vector<double> u{0.2, 0.7, 0.5};
  const std::vector<double> eps{0.3, -1.2, 0.8, 0.1, -0.4, 1.9};
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor raw = testing::random_tensor(rng, {3, gmm_raw_size(2, 2)}, -2.0, 2.0);
    const double err = testing::gradient_error(
        [&](const auto& in) {
          const GmmParams p = parse_gmm(in[0], 2, 2);
          return ad::sum(gmm_log_pdf(p, gmm_sample(p, u, eps).values));
        },
        {raw});
    EXPECT_LT(err, 1e-4);
  }
}

TEST(GaussianFit, IdenticalParticles) {
  const std::vector<double> z{1, 2, 3, 1, 2, 3, 1, 2, 3};
  const auto g = fit_gaussian(z, 3, std::vector<double>{0.2, 0.3, 0.5});
  EXPECT_NEAR(g.mean()[0], 1.0, 1e-15);
  EXPECT_NEAR(g.mean()[1], 2.0, 1e-15);
  EXPECT_NEAR(g.mean()[2], 3.0, 1e-15);
  EXPECT_NEAR(g.covariance()(0, 0), 1e-6, 1e-15);
}

TEST(GaussianFit, SymmetricPair) {
  const auto g = fit_gaussian(std::vector<double>{0, 0, 0, 2, 0, 0}, 3, std::vector<double>{0.5, 0.5});
  EXPECT_EQ(g.mean(), Eigen::Vector3d(1, 0, 0));
  EXPECT_NEAR(g.covariance()(0, 0), 1.0 + 1e-6, 1e-15);
}

TEST(GaussianFit, MatchesTwoPassMoments) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-5.0, 5.0), w(0.0, 1.0);
  const std::size_t n = 40;
  std::vector<double> z(n * 3), wt(n);
  for (auto& v : z) v = u(rng);
  double total = 0.0;
  for (auto& v : wt) total += v = w(rng);
  for (auto& v : wt) v /= total;
  const auto g = fit_gaussian(z, 3, wt);
  double mean[3] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) mean[a] += wt[i] * z[i * 3 + a];
  }
  for (int a = 0; a < 3; ++a) {
    EXPECT_NEAR(g.mean()[a], mean[a], 1e-12);
    for (int b = 0; b < 3; ++b) {
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i) c += wt[i] * (z[i * 3 + a] - mean[a]) * (z[i * 3 + b] - mean[b]);
      EXPECT_NEAR(g.covariance()(a, b), c + (a == b ? 1e-6 : 0.0), 1e-12);
    }
  }
}

TEST(GaussianFit, SingularCovarianceThrows) {
  const std::vector<double> z{1, 2, 3, 1, 2, 3};
  EXPECT_THROW(fit_gaussian(z, 3, std::vector<double>{0.5, 0.5}, 0.0), std::domain_error);
  EXPECT_THROW(fit_gaussian(z, 3, std::vector<double>{0.5, 0.6}), std::invalid_argument);
}

TEST(Gaussian, LogPdfMatchesClosedForm) {
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.3, 0.3, 1.0;
  const Gaussian g(Eigen::Vector2d(1.0, -1.0), cov);
  const double det = 2.0 - 0.09;
  const double rx = 0.5, ry = 0.5;  // x = (1.5, -0.5)
  const double quad = (1.0 * rx * rx - 2 * 0.3 * rx * ry + 2.0 * ry * ry) / det;
  const double expected = -std::log(2 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad;
  EXPECT_NEAR(g.log_pdf(std::vector<double>{1.5, -0.5}), expected, 1e-12);
}

TEST(Kde, SingleSamplePeak) {
  const double h = 0.7;
  EXPECT_NEAR(kde_log_pdf(std::vector<double>{1.2}, 1, std::vector<double>{h}, std::vector<double>{1.2}),
              -std::log(h * std::sqrt(2 * std::numbers::pi)), 1e-14);
}

TEST(Kde, StandardNormalDensityAtZero) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> s(100000);
  for (auto& v : s) v = n(rng);
  const Kde kde(s, 1, Kde::scott_bandwidth(s, 1));
  EXPECT_NEAR(kde.bandwidth()[0], std::pow(1e5, -0.2), 0.01);
  EXPECT_NEAR(std::exp(kde.log_pdf(std::vector<double>{0.0})), 0.3989, 0.03989);
}

TEST(Kde, FarTailIsFinite) {
  const Kde kde({0.0, 0.0, 1.0, 1.0}, 2, {0.5, 0.5});
  const double v = kde.log_pdf(std::vector<double>{100.0, 100.0});
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_LT(v, -1e4);
}

TEST(Kde, SamplingIsDeterministic) {
  const Kde kde({0.0, 0.0, 1.0, 1.0}, 2, {0.5, 0.5});
  Rng a(3), b(3);
  std::vector<double> x(2), y(2);
  kde.sample(a, x);
  kde.sample(b, y);
  EXPECT_EQ(x, y);
}

}  // namespace
}  // namespace dvsmc::dist
