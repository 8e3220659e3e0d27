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


#include "dvsmc/eval/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace dvsmc::eval {
namespace {

constexpr double kFloor = 1e-290;

std::size_t at(const std::array<std::size_t, 3>& s, std::size_t i, std::size_t j, std::size_t k) {
  return (i * s[1] + j) * s[2] + k;
}

// Convolves `grid` along `axis` with a Gaussian density of std h grid cells of
// width d.
void convolve_axis(std::vector<double>& grid, const std::array<std::size_t, 3>& s, std::size_t axis, double h,
                   double d) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(10.0 * h));
  std::vector<double> kernel(2 * radius + 1);
  for (std::ptrdiff_t r = -radius; r <= radius; ++r) {
    const double u = static_cast<double>(r) / h;
    kernel[r + radius] = std::exp(-0.5 * u * u) / (h * d * std::sqrt(2.0 * std::numbers::pi));
  }
  const std::size_t len = s[axis];
  const std::size_t stride = axis == 0 ? s[1] * s[2] : axis == 1 ? s[2] : 1;
  const std::size_t lines = grid.size() / len;
  std::vector<double> in(len), out(len);
  for (std::size_t line = 0; line < lines; ++line) {
    // Base index of this line with the axis coordinate at zero.
    std::size_t base;
    if (axis == 0) base = line;
    else if (axis == 1) base = (line / s[2]) * s[1] * s[2] + line % s[2];
    else base = line * s[2];
    for (std::size_t p = 0; p < len; ++p) in[p] = grid[base + p * stride];
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t p = 0; p < len; ++p) {
      if (in[p] == 0.0) continue;
      const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(p) - radius);
      const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(len) - 1, static_cast<std::ptrdiff_t>(p) + radius);
      for (std::ptrdiff_t q = lo; q <= hi; ++q) out[q] += in[p] * kernel[q - static_cast<std::ptrdiff_t>(p) + radius];
    }
    for (std::size_t p = 0; p < len; ++p) grid[base + p * stride] = out[p];
  }
}

}  // namespace

AttractorPrior::AttractorPrior(dist::Kde kde, const PriorConfig& config) : kde_(std::move(kde)), config_(config) {}

AttractorPrior AttractorPrior::build(const PriorConfig& config, const ssm::LorenzParams& lorenz) {
  if (config.length < 2) throw std::invalid_argument("build_prior: need at least two states");
  if (!(config.spacing > 0.0)) throw std::invalid_argument("build_prior: grid spacing must be positive");
  for (std::size_t a = 0; a < 3; ++a) {
    if (!(config.upper[a] > config.lower[a])) throw std::invalid_argument("build_prior: empty grid");
  }
  Rng rng = make_rng(config.seed, {0x505249ULL});
  std::normal_distribution<double> jitter(0.0, 1.0);
  ssm::StateVector s{1.0 + jitter(rng), 1.0 + jitter(rng), 1.0 + jitter(rng)};
  for (std::size_t i = 0; i < config.burn_in; ++i) s = ssm::rk4_step(s, lorenz.dt, lorenz);
  std::vector<double> samples;
  samples.reserve(config.length * 3);
  for (std::size_t i = 0; i < config.length; ++i) {
    s = ssm::rk4_step(s, lorenz.dt, lorenz);
    samples.insert(samples.end(), s.begin(), s.end());
  }
  auto h = dist::Kde::scott_bandwidth(samples, 3);
  AttractorPrior prior(dist::Kde(std::move(samples), 3, std::move(h)), config);
  prior.build_grid();
  prior.build_index();
  return prior;
}

void AttractorPrior::build_grid() {
  const double d = config_.spacing;
  for (std::size_t a = 0; a < 3; ++a) {
    shape_[a] = static_cast<std::size_t>(std::floor((config_.upper[a] - config_.lower[a]) / d)) + 1;
  }
  std::vector<double> grid(shape_[0] * shape_[1] * shape_[2], 0.0);
  const auto& x = kde_.samples();
  const double mass = 1.0 / static_cast<double>(kde_.size());
  // Linear binning.
  for (std::size_t n = 0; n < kde_.size(); ++n) {
    std::array<std::size_t, 3> i0{};
    std::array<double, 3> f{};
    bool inside = true;
    for (std::size_t a = 0; a < 3; ++a) {
      const double u = (x[n * 3 + a] - config_.lower[a]) / d;
      if (u < 0.0 || u >= static_cast<double>(shape_[a] - 1)) inside = false;
      else {
        i0[a] = static_cast<std::size_t>(u);
        f[a] = u - static_cast<double>(i0[a]);
      }
    }
    if (!inside) continue;
    for (int c = 0; c < 8; ++c) {
      double w = mass;
      std::array<std::size_t, 3> idx{};
      for (std::size_t a = 0; a < 3; ++a) {
        const bool up = (c >> a) & 1;
        w *= up ? f[a] : 1.0 - f[a];
        idx[a] = i0[a] + (up ? 1 : 0);
      }
      grid[at(shape_, idx[0], idx[1], idx[2])] += w;
    }
  }
  for (std::size_t a = 0; a < 3; ++a) convolve_axis(grid, shape_, a, kde_.bandwidth()[a] / d, d);
  log_grid_.resize(grid.size());
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) log_grid_[i] = grid[i] > kFloor ? std::log(grid[i]) : neg_inf;
}

void AttractorPrior::build_index() {
  constexpr double kSide = 2.0;
  const auto& x = kde_.samples();
  const auto& h = kde_.bandwidth();
  const std::size_t n = kde_.size();
  std::array<double, 3> lo{}, hi{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], x[i * 3 + a] / h[a]);
      hi[a] = std::max(hi[a], x[i * 3 + a] / h[a]);
    }
  }
  std::array<std::size_t, 3> cells{};
  for (std::size_t a = 0; a < 3; ++a) cells[a] = static_cast<std::size_t>((hi[a] - lo[a]) / kSide) + 1;
  std::vector<std::size_t> cell_of(n);
  std::vector<std::size_t> count(cells[0] * cells[1] * cells[2], 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t a = 0; a < 3; ++a) {
      const auto k = std::min(cells[a] - 1, static_cast<std::size_t>((x[i * 3 + a] / h[a] - lo[a]) / kSide));
      c = c * cells[a] + k;
    }
    cell_of[i] = c;
    ++count[c];
  }
  std::vector<std::size_t> start(count.size() + 1, 0);
  for (std::size_t c = 0; c < count.size(); ++c) start[c + 1] = start[c] + count[c];
  std::vector<std::size_t> fill(start.begin(), start.end() - 1);
  scaled_.assign(n * 3, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t slot = fill[cell_of[i]]++;
    for (std::size_t a = 0; a < 3; ++a) scaled_[slot * 3 + a] = x[i * 3 + a] / h[a];
  }
  buckets_.clear();
  for (std::size_t c = 0; c < count.size(); ++c) {
    if (count[c] == 0) continue;
    Bucket b{{}, {}, start[c], start[c + 1]};
    b.lo.fill(std::numeric_limits<double>::infinity());
    b.hi.fill(-std::numeric_limits<double>::infinity());
    for (std::size_t i = b.begin; i < b.end; ++i) {
      for (std::size_t a = 0; a < 3; ++a) {
        b.lo[a] = std::min(b.lo[a], scaled_[i * 3 + a]);
        b.hi[a] = std::max(b.hi[a], scaled_[i * 3 + a]);
      }
    }
    buckets_.push_back(b);
  }
  log_norm_ = -std::log(static_cast<double>(n)) - 1.5 * std::log(2.0 * std::numbers::pi) -
              std::log(h[0]) - std::log(h[1]) - std::log(h[2]);
}

double AttractorPrior::exact_log_pdf(const ssm::StateVector& z) const {
  constexpr double kCut = 100.0;  // squared-distance margin: 50 nats
  const auto& h = kde_.bandwidth();
  const std::array<double, 3> q{z[0] / h[0], z[1] / h[1], z[2] / h[2]};
  auto sq = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t a = 0; a < 3; ++a) s += (q[a] - scaled_[i * 3 + a]) * (q[a] - scaled_[i * 3 + a]);
    return s;
  };
  std::vector<double> bound(buckets_.size());
  std::size_t nearest = 0;
  for (std::size_t b = 0; b < buckets_.size(); ++b) {
    double s = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      const double g = std::max({0.0, buckets_[b].lo[a] - q[a], q[a] - buckets_[b].hi[a]});
      s += g * g;
    }
    bound[b] = s;
    if (s < bound[nearest]) nearest = b;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = buckets_[nearest].begin; i < buckets_[nearest].end; ++i) best = std::min(best, sq(i));
  const double limit = best + kCut;
  // Exponents are taken relative to -best / 2, so the sum is at least 1.
  double acc = 0.0;
  for (std::size_t b = 0; b < buckets_.size(); ++b) {
    if (bound[b] > limit) continue;
    for (std::size_t i = buckets_[b].begin; i < buckets_[b].end; ++i) acc += std::exp(-0.5 * (sq(i) - best));
  }
  return log_norm_ - 0.5 * best + std::log(acc);
}

double AttractorPrior::log_pdf(const ssm::StateVector& z) const {
  const double d = config_.spacing;
  std::array<std::size_t, 3> i0{};
  std::array<double, 3> f{};
  for (std::size_t a = 0; a < 3; ++a) {
    const double u = (z[a] - config_.lower[a]) / d;
    if (!(u >= 0.0 && u < static_cast<double>(shape_[a] - 1))) return exact_log_pdf(z);
    i0[a] = static_cast<std::size_t>(u);
    f[a] = u - static_cast<double>(i0[a]);
  }
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    double w = 1.0;
    std::array<std::size_t, 3> idx{};
    for (std::size_t a = 0; a < 3; ++a) {
      const bool up = (c >> a) & 1;
      w *= up ? f[a] : 1.0 - f[a];
      idx[a] = i0[a] + (up ? 1 : 0);
    }
    const double v = log_grid_[at(shape_, idx[0], idx[1], idx[2])];
    if (std::isinf(v)) return exact_log_pdf(z);
    acc += w * v;
  }
  return acc;
}

ad::Tensor AttractorPrior::sample(std::size_t n, Rng& rng) const {
  std::vector<double> out(n * 3);
  for (std::size_t i = 0; i < n; ++i) kde_.sample(rng, std::span<double>(out).subspan(i * 3, 3));
  return ad::Tensor({n, 3}, std::move(out));
}

}  // namespace dvsmc::eval
