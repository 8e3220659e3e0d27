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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>

#include "dvsmc/ssm/dataset.hpp"
#include "dvsmc/ssm/lorenz.hpp"
#include "dvsmc/ssm/measurement.hpp"
#include "gradcheck.hpp"

namespace dvsmc::ssm {
namespace {

LorenzParams noise_free() {
  LorenzParams p;
  p.process_noise = 0.0;
  return p;
}

TEST(Lorenz, OriginIsFixedPoint) {
  Rng rng(1);
  const StateVector s = lorenz_step({0, 0, 0}, 0.02, rng, noise_free());
  EXPECT_EQ(s, (StateVector{0, 0, 0}));
}

TEST(Lorenz, NonTrivialFixedPointIsPreserved) {
  // C+ = (sqrt(beta (rho - 1)), sqrt(beta (rho - 1)), rho - 1) with beta (rho - 1) = 72.
  Rng rng(1);
  const double c = std::sqrt(72.0);
  const StateVector s = lorenz_step({c, c, 27.0}, 0.02, rng, noise_free());
  EXPECT_NEAR(s[0], c, 1e-6);
  EXPECT_NEAR(s[1], c, 1e-6);
  EXPECT_NEAR(s[2], 27.0, 1e-6);
}

TEST(Lorenz, SameSeedSameStep) {
  Rng a(42), b(42);
  EXPECT_EQ(lorenz_step({1, 2, 3}, 0.02, a), lorenz_step({1, 2, 3}, 0.02, b));
}

TEST(Lorenz, NoiseHasConfiguredSpread) {
  Rng rng(5);
  const StateVector base = rk4_step({1, 2, 20}, 0.02);
  double sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const StateVector s = lorenz_step({1, 2, 20}, 0.02, rng);
    sq += (s[0] - base[0]) * (s[0] - base[0]);
  }
  EXPECT_NEAR(std::sqrt(sq / n), 0.5, 0.01);
}

TEST(Lorenz, RejectsBadInput) {
  Rng rng(1);
  EXPECT_THROW(lorenz_step({1, 1, 1}, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(lorenz_step({NAN, 1, 1}, 0.02, rng), std::domain_error);
}

TEST(Lorenz, NoiseFreeTrajectoryStaysInAttractorBox) {
  // The attractor reaches |y| ~ 26.1, slightly past the [-25, 25] render box.
  StateVector s{1, 1, 1};
  for (int i = 0; i < 1000; ++i) s = rk4_step(s, 0.02);
  for (int i = 0; i < 10000; ++i) {
    s = rk4_step(s, 0.02);
    ASSERT_LE(std::abs(s[0]), 25.0);
    ASSERT_LE(std::abs(s[1]), 28.0);
    ASSERT_GE(s[2], 0.0);
    ASSERT_LE(s[2], 50.0);
  }
}

TEST(Render, PeakAtProjectedPixel) {
  // Pixel centre 14 <-> coordinate 14.5 * 50 / 28 - 25.
  const double x = 14.5 * 50.0 / 28.0 - 25.0;
  const auto c = project(x, x);
  EXPECT_NEAR(c[0], 14.0, 1e-12);
  const Image img = render({x, x, 10.0});
  const auto argmax = std::distance(img.begin(), std::max_element(img.begin(), img.end()));
  EXPECT_EQ(argmax, static_cast<long>(14 * kImageSide + 14));
  EXPECT_NEAR(img[14 * kImageSide + 14], 1.0, 1e-12);
}

TEST(Render, IsDeterministicAndIgnoresZ) {
  EXPECT_EQ(render({3.0, -4.0, 10.0}), render({3.0, -4.0, 10.0}));
  EXPECT_EQ(render({3.0, -4.0, 10.0}), render({3.0, -4.0, 40.0}));
}

TEST(Render, OutOfBoxStateClampsToBorder) {
  const auto c = project(100.0, -100.0);
  EXPECT_EQ(c[0], 27.0);
  EXPECT_EQ(c[1], 0.0);
}

// Composite Simpson integral of exp(-(u - c)^2 / (2 s^2)) over [-0.5, 27.5].
double truncated_gaussian_integral(double centre, double s) {
  const int n = 20000;
  const double a = -0.5, b = 27.5, h = (b - a) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double u = a + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * std::exp(-(u - centre) * (u - centre) / (2 * s * s));
  }
  return acc * h / 3.0;
}

TEST(Render, InteriorMassMatchesPsfIntegral) {
  const StateVector s{1.3, -2.1, 20.0};
  const auto c = project(s[0], s[1]);
  const double expected = truncated_gaussian_integral(c[0], 1.5) * truncated_gaussian_integral(c[1], 1.5);
  const Image img = render(s);
  double total = 0.0;
  for (double v : img) total += v;
  EXPECT_NEAR(total, expected, 1e-3);
  EXPECT_NEAR(expected, 2.0 * std::numbers::pi * 1.5 * 1.5, 1e-3);
}

TEST(Render, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    ad::Tensor states = testing::random_tensor(rng, {3, 3}, -20.0, 20.0);
    const double err = testing::gradient_error(
        [](const auto& x) { return testing::project(render(x[0]), 99); }, {states});
    EXPECT_LT(err, 1e-4);
  }
}

TEST(Observe, IdentityWithoutNoiseOrMasking) {
  Rng rng(3);
  const Image clean = render({2.0, 5.0, 1.0});
  const auto frame = observe(clean, 0.0, 1.0, rng);
  EXPECT_EQ(frame.image, clean);
  EXPECT_EQ(frame.observed_count(), kPixels);
}

TEST(Observe, ZeroProportionMasksEverything) {
  Rng rng(3);
  const auto frame = observe(render({0, 0, 0}), 0.3, 0.0, rng);
  EXPECT_EQ(frame.observed_count(), 0u);
  for (double v : frame.image) EXPECT_EQ(v, 0.0);
}

TEST(Observe, MaskIsBlockAligned) {
  Rng rng(4);
  const auto frame = observe(render({0, 0, 0}), 0.1, 0.5, rng);
  for (std::size_t r = 0; r < kImageSide; ++r) {
    for (std::size_t c = 0; c < kImageSide; ++c) {
      const std::size_t corner = (r / 4 * 4) * kImageSide + (c / 4 * 4);
      EXPECT_EQ(frame.mask[r * kImageSide + c], frame.mask[corner]);
    }
  }
}

TEST(Observe, HalfProportionKeepsHalfTheBlocks) {
  Rng rng(11);
  const Image clean = render({0, 0, 0});
  const int frames = 2041;  // 2041 * 49 = 100009 blocks
  std::size_t kept = 0, total = 0;
  for (int i = 0; i < frames; ++i) {
    const auto f = observe(clean, 0.0, 0.5, rng);
    kept += f.observed_count() / 16;
    total += 49;
  }
  const double frac = static_cast<double>(kept) / static_cast<double>(total);
  EXPECT_NEAR(frac, 0.5, 3.0 * std::sqrt(0.25 / static_cast<double>(total)));
}

TEST(LogLikelihood, ZeroResidualIsNormalizer) {
  const StateVector s{4.0, -7.0, 30.0};
  const double sigma = 0.3;
  const auto frame = full_frame(render(s));
  const double expected = static_cast<double>(kPixels) * -std::log(sigma * std::sqrt(2 * std::numbers::pi));
  EXPECT_NEAR(log_likelihood(s, frame, sigma), expected, 1e-9);
}

TEST(LogLikelihood, FullyMaskedFrameIsZero) {
  Rng rng(1);
  const auto frame = observe(render({0, 0, 0}), 0.2, 0.0, rng);
  EXPECT_EQ(log_likelihood({5, 5, 5}, frame, 0.2), 0.0);
}

TEST(LogLikelihood, MatchesHighPrecisionReevaluation) {
  Rng rng(21);
  const StateVector truth{-6.0, 8.0, 25.0};
  const StateVector guess{-5.2, 7.1, 22.0};
  const double sigma = 0.4;
  const auto frame = observe(render(truth), sigma, 0.6, rng);
  // Independent long-double evaluation of the masked Gaussian log-density sum.
  long double acc = 0.0L;
  const long double scale = 28.0L / 50.0L;
  const long double cx = (guess[0] + 25.0L) * scale - 0.5L, cy = (guess[1] + 25.0L) * scale - 0.5L;
  for (std::size_t r = 0; r < kImageSide; ++r) {
    for (std::size_t c = 0; c < kImageSide; ++c) {
      const std::size_t p = r * kImageSide + c;
      if (!frame.mask[p]) continue;
      const long double dx = c - cx, dy = r - cy;
      const long double pred = std::exp(-(dx * dx + dy * dy) / (2.0L * 1.5L * 1.5L));
      const long double res = frame.image[p] - pred;
      acc += -std::log(sigma * std::sqrt(2.0L * std::numbers::pi_v<long double>)) - res * res / (2.0L * sigma * sigma);
    }
  }
  EXPECT_NEAR(log_likelihood(guess, frame, sigma), static_cast<double>(acc), 1e-9);
}

TEST(LogLikelihood, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  const auto frame = observe(render({1.0, 2.0, 3.0}), 0.2, 0.7, rng);
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 20; ++trial) {
    ad::Tensor states = testing::random_tensor(gen, {4, 3}, -4.0, 6.0);
    const double err = testing::gradient_error(
        [&](const auto& x) { return ad::sum(log_likelihood(x[0], frame, 0.2)); }, {states});
    EXPECT_LT(err, 1e-4);
  }
}

TEST(LogLikelihood, BatchMatchesScalarPath) {
  Rng rng(2);
  const auto frame = observe(render({0, 0, 0}), 0.1, 1.0, rng);
  ad::Tensor states({2, 6}, {0.5, 0.1, 9, 1, 1, 1, -3, 2, 9, 0, 0, 0});
  const auto batch = log_likelihood(states, frame, 0.1);
  EXPECT_DOUBLE_EQ(batch[0], log_likelihood({0.5, 0.1, 9}, frame, 0.1));
  EXPECT_DOUBLE_EQ(batch[1], log_likelihood({-3, 2, 9}, frame, 0.1));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Dataset, TrainingConfigurationShape) {
  const auto ds = generate_dataset(1024, 8, {{0.1, 0.3}, {1.0}}, 5);
  ASSERT_EQ(ds.sequences.size(), 1024u);
  for (const auto& tr : ds.sequences) {
    ASSERT_EQ(tr.length(), 8u);
    ASSERT_EQ(tr.frames.size(), 8u);
  }
}

TEST(Dataset, ValidationConfigurationShape) {
  const auto ds = generate_dataset(32, 128, {}, 6);
  ASSERT_EQ(ds.sequences.size(), 32u);
  EXPECT_EQ(ds.sequences[0].length(), 128u);
}

TEST(Dataset, SameSeedGivesByteIdenticalFiles) {
  const auto dir = std::filesystem::temp_directory_path();
  const NoiseSettings settings{{0.1, 0.5}, {0.4, 1.0}};
  save_dataset(generate_dataset(16, 4, settings, 77), dir / "dvsmc_ds_a.dvsmc");
  save_dataset(generate_dataset(16, 4, settings, 77), dir / "dvsmc_ds_b.dvsmc");
  EXPECT_EQ(slurp(dir / "dvsmc_ds_a.dvsmc"), slurp(dir / "dvsmc_ds_b.dvsmc"));
  save_dataset(generate_dataset(16, 4, settings, 78), dir / "dvsmc_ds_c.dvsmc");
  EXPECT_NE(slurp(dir / "dvsmc_ds_a.dvsmc"), slurp(dir / "dvsmc_ds_c.dvsmc"));
}

TEST(Dataset, LoadRestoresSequences) {
  const auto path = std::filesystem::temp_directory_path() / "dvsmc_ds_rt.dvsmc";
  const auto ds = generate_dataset(5, 3, {{0.2}, {0.6}}, 9);
  save_dataset(ds, path);
  const auto back = load_dataset(path);
  ASSERT_EQ(back.sequences.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(back.sequences[i].states, ds.sequences[i].states);
    EXPECT_EQ(back.sequences[i].initial, ds.sequences[i].initial);
    EXPECT_EQ(back.sequences[i].frames[2].image, ds.sequences[i].frames[2].image);
    EXPECT_EQ(back.sequences[i].frames[2].mask, ds.sequences[i].frames[2].mask);
    EXPECT_EQ(back.sequences[i].seed, ds.sequences[i].seed);
  }
}

TEST(Dataset, StatesFollowDynamicsUnderRecordedSeed) {
  const auto tr = simulate_trajectory(6, 0.1, 1.0, 1234);
  const auto again = simulate_trajectory(6, 0.1, 1.0, 1234);
  EXPECT_EQ(tr.states, again.states);
  // Consecutive states differ from the noise-free step by the 0.5-std noise only.
  StateVector prev = tr.initial;
  for (const auto& s : tr.states) {
    const StateVector det = rk4_step(prev, 0.02);
    for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(s[k] - det[k]), 3.0);
    prev = s;
  }
}

}  // namespace
}  // namespace dvsmc::ssm
