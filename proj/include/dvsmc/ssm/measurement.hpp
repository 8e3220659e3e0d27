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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dvsmc/autodiff/tensor.hpp"
#include "dvsmc/ssm/lorenz.hpp"
#include "dvsmc/util/random.hpp"

// Image measurement process: a Gaussian point-spread blob at the projected
// (x, y) state, additive white Gaussian noise, then random 4x4 block dropout.
namespace dvsmc::ssm {

inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kPixels = kImageSide * kImageSide;
inline constexpr std::size_t kBlockSide = 4;

struct PsfConfig {
  // (x, y) in [-half_width, half_width]^2 maps onto the pixel grid.
  double half_width = 25.0;
  double sigma_px = 1.5;
  double amplitude = 1.0;
};

// Row-major kImageSide x kImageSide; columns follow x, rows follow y.
using Image = std::vector<double>;

struct ObservationFrame {
  Image image;                     // masked-out pixels hold 0
  std::vector<std::uint8_t> mask;  // 1 = observed
  std::size_t observed_count() const;
};

// Blob centre in pixel coordinates (column, row), clamped to the border pixels.
std::array<double, 2> project(double x, double y, const PsfConfig& psf = {});

Image render(const StateVector& state, const PsfConfig& psf = {});

// Differentiable batched render. states: [N, d] with d >= 2 (columns 0 and 1
// are x and y). Returns [N, kPixels].
ad::Tensor render(const ad::Tensor& states, const PsfConfig& psf = {});

// Row i of states rendered at pixel pixels[i] only. states: [M, d], d >= 2.
// Returns [M], differentiable in states.
ad::Tensor render_pixels(const ad::Tensor& states, std::span<const std::size_t> pixels, const PsfConfig& psf = {});

// Adds N(0, sigma_v^2) to every pixel, then keeps each aligned 4x4 block with
// probability `proportion`.
ObservationFrame observe(const Image& clean, double sigma_v, double proportion, Rng& rng);

// Full frame, nothing masked.
ObservationFrame full_frame(Image image);

// Sum over observed pixels of log N(frame | render(state), sigma_v^2).
// Returns 0 when nothing is observed.
double log_likelihood(const StateVector& state, const ObservationFrame& frame, double sigma_v,
                      const PsfConfig& psf = {});

// Batched, differentiable in states. states: [N, d], d >= 2. Returns [N].
ad::Tensor log_likelihood(const ad::Tensor& states, const ObservationFrame& frame, double sigma_v,
                          const PsfConfig& psf = {});

}  // namespace dvsmc::ssm
