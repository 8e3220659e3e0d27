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

#include "dvsmc/ssm/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dvsmc::ssm {
namespace {

constexpr double kMaxCoord = static_cast<double>(kImageSide - 1);

struct Axis1d {
  double centre = 0.0;
  double dcentre = 0.0;  // d centre / d state coordinate; 0 when clamped
  std::array<double, kImageSide> profile{};
};

Axis1d axis_profile(double coord, const PsfConfig& psf) {
  const double scale = static_cast<double>(kImageSide) / (2.0 * psf.half_width);
  const double raw = (coord + psf.half_width) * scale - 0.5;
  Axis1d a;
  a.centre = std::clamp(raw, 0.0, kMaxCoord);
  a.dcentre = (raw >= 0.0 && raw <= kMaxCoord) ? scale : 0.0;
  const double inv = 1.0 / (2.0 * psf.sigma_px * psf.sigma_px);
  for (std::size_t i = 0; i < kImageSide; ++i) {
    const double d = static_cast<double>(i) - a.centre;
    a.profile[i] = std::exp(-d * d * inv);
  }
  return a;
}

void check_states(const ad::Tensor& states, const char* op) {
  if (states.rank() != 2 || states.dim(1) < 2) {
    throw ad::ShapeError(std::string(op) + ": expected [N, d>=2] states, got " + ad::to_string(states.shape()));
  }
}

void check_frame(const ObservationFrame& frame) {
  if (frame.image.size() != kPixels || frame.mask.size() != kPixels) {
    throw ad::ShapeError("observation frame must be 28x28");
  }
}

}  // namespace

std::size_t ObservationFrame::observed_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::array<double, 2> project(double x, double y, const PsfConfig& psf) {
  return {axis_profile(x, psf).centre, axis_profile(y, psf).centre};
}

Image render(const StateVector& state, const PsfConfig& psf) {
  const Axis1d cx = axis_profile(state[0], psf);
  const Axis1d cy = axis_profile(state[1], psf);
  Image img(kPixels);
  for (std::size_t r = 0; r < kImageSide; ++r) {
    for (std::size_t c = 0; c < kImageSide; ++c) {
      img[r * kImageSide + c] = psf.amplitude * cy.profile[r] * cx.profile[c];
    }
  }
  return img;
}

ad::Tensor render(const ad::Tensor& states, const PsfConfig& psf) {
  check_states(states, "render");
  const std::size_t n = states.dim(0), d = states.dim(1);
  const auto s = states.data();
  std::vector<double> out(n * kPixels);
  std::vector<Axis1d> ax(n), ay(n);
  for (std::size_t k = 0; k < n; ++k) {
    ax[k] = axis_profile(s[k * d], psf);
    ay[k] = axis_profile(s[k * d + 1], psf);
    double* img = out.data() + k * kPixels;
    for (std::size_t r = 0; r < kImageSide; ++r) {
      for (std::size_t c = 0; c < kImageSide; ++c) {
        img[r * kImageSide + c] = psf.amplitude * ay[k].profile[r] * ax[k].profile[c];
      }
    }
  }
  ad::Tensor result({n, kPixels}, std::move(out));
  if (!states.attached()) return result;
  const int node = states.node();
  const double inv_var = 1.0 / (psf.sigma_px * psf.sigma_px);
  return states.tape()->record(result, [node, n, d, ax, ay, inv_var, img = result.detach()](
                                           std::span<const double> g, ad::Tape& tape) {
    auto gs = tape.grad_buffer(node);
    const auto pix = img.data();
    for (std::size_t k = 0; k < n; ++k) {
      double dx = 0.0, dy = 0.0;
      for (std::size_t r = 0; r < kImageSide; ++r) {
        for (std::size_t c = 0; c < kImageSide; ++c) {
          const std::size_t p = k * kPixels + r * kImageSide + c;
          const double w = g[p] * pix[p] * inv_var;
          dx += w * (static_cast<double>(c) - ax[k].centre);
          dy += w * (static_cast<double>(r) - ay[k].centre);
        }
      }
      gs[k * d] += dx * ax[k].dcentre;
      gs[k * d + 1] += dy * ay[k].dcentre;
    }
  });
}

ad::Tensor render_pixels(const ad::Tensor& states, std::span<const std::size_t> pixels, const PsfConfig& psf) {
  check_states(states, "render_pixels");
  const std::size_t n = states.dim(0), d = states.dim(1);
  if (pixels.size() != n) throw ad::ShapeError("render_pixels: need one pixel per state row");
  const auto s = states.data();
  std::vector<double> out(n);
  // Per row: d out / d x and d out / d y.
  std::vector<double> jx(n), jy(n);
  const double inv_var = 1.0 / (psf.sigma_px * psf.sigma_px);
  for (std::size_t k = 0; k < n; ++k) {
    if (pixels[k] >= kPixels) throw std::out_of_range("render_pixels: pixel index out of range");
    const Axis1d ax = axis_profile(s[k * d], psf);
    const Axis1d ay = axis_profile(s[k * d + 1], psf);
    const std::size_t r = pixels[k] / kImageSide, c = pixels[k] % kImageSide;
    out[k] = psf.amplitude * ay.profile[r] * ax.profile[c];
    jx[k] = out[k] * inv_var * (static_cast<double>(c) - ax.centre) * ax.dcentre;
    jy[k] = out[k] * inv_var * (static_cast<double>(r) - ay.centre) * ay.dcentre;
  }
  ad::Tensor result({n}, std::move(out));
  if (!states.attached()) return result;
  const int node = states.node();
  return states.tape()->record(result, [node, n, d, jx = std::move(jx), jy = std::move(jy)](
                                           std::span<const double> g, ad::Tape& tape) {
    auto gs = tape.grad_buffer(node);
    for (std::size_t k = 0; k < n; ++k) {
      gs[k * d] += g[k] * jx[k];
      gs[k * d + 1] += g[k] * jy[k];
    }
  });
}

ObservationFrame observe(const Image& clean, double sigma_v, double proportion, Rng& rng) {
  if (clean.size() != kPixels) throw ad::ShapeError("observe: image must be 28x28");
  if (!(proportion >= 0.0 && proportion <= 1.0)) throw std::invalid_argument("observe: proportion outside [0, 1]");
  if (!(sigma_v >= 0.0)) throw std::invalid_argument("observe: sigma_v must be non-negative");
  ObservationFrame frame{clean, std::vector<std::uint8_t>(kPixels, 1)};
  if (sigma_v > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma_v);
    for (auto& v : frame.image) v += noise(rng);
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr std::size_t blocks = kImageSide / kBlockSide;
  for (std::size_t br = 0; br < blocks; ++br) {
    for (std::size_t bc = 0; bc < blocks; ++bc) {
      // Draw for every block so the stream does not depend on P.
      const bool keep = u(rng) < proportion;
      if (keep) continue;
      for (std::size_t r = br * kBlockSide; r < (br + 1) * kBlockSide; ++r) {
        for (std::size_t c = bc * kBlockSide; c < (bc + 1) * kBlockSide; ++c) {
          frame.image[r * kImageSide + c] = 0.0;
          frame.mask[r * kImageSide + c] = 0;
        }
      }
    }
  }
  return frame;
}

ObservationFrame full_frame(Image image) {
  if (image.size() != kPixels) throw ad::ShapeError("full_frame: image must be 28x28");
  return {std::move(image), std::vector<std::uint8_t>(kPixels, 1)};
}

double log_likelihood(const StateVector& state, const ObservationFrame& frame, double sigma_v,
                      const PsfConfig& psf) {
  ad::Tensor s({1, kStateDim}, {state[0], state[1], state[2]});
  return log_likelihood(s, frame, sigma_v, psf)[0];
}

ad::Tensor log_likelihood(const ad::Tensor& states, const ObservationFrame& frame, double sigma_v,
                          const PsfConfig& psf) {
  check_states(states, "log_likelihood");
  check_frame(frame);
  if (!(sigma_v > 0.0)) throw std::invalid_argument("log_likelihood: sigma_v must be positive");
  const std::size_t n = states.dim(0), d = states.dim(1);
  const std::size_t observed = frame.observed_count();
  const double log_norm = -std::log(sigma_v * std::sqrt(2.0 * std::numbers::pi));
  const double inv_var = 1.0 / (sigma_v * sigma_v);
  const auto s = states.data();
  std::vector<double> out(n, 0.0);
  std::vector<Axis1d> ax(n), ay(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (observed == 0) continue;
    ax[k] = axis_profile(s[k * d], psf);
    ay[k] = axis_profile(s[k * d + 1], psf);
    double sq = 0.0;
    for (std::size_t r = 0; r < kImageSide; ++r) {
      for (std::size_t c = 0; c < kImageSide; ++c) {
        const std::size_t p = r * kImageSide + c;
        if (!frame.mask[p]) continue;
        const double res = frame.image[p] - psf.amplitude * ay[k].profile[r] * ax[k].profile[c];
        sq += res * res;
      }
    }
    out[k] = static_cast<double>(observed) * log_norm - 0.5 * inv_var * sq;
  }
  ad::Tensor result({n}, std::move(out));
  if (!states.attached() || observed == 0) return result;
  const int node = states.node();
  const double inv_psf = 1.0 / (psf.sigma_px * psf.sigma_px);
  const double amp = psf.amplitude;
  return states.tape()->record(result, [node, n, d, ax, ay, inv_var, inv_psf, amp,
                                        image = frame.image, mask = frame.mask](std::span<const double> g,
                                                                                 ad::Tape& tape) {
    auto gs = tape.grad_buffer(node);
    for (std::size_t k = 0; k < n; ++k) {
      double dx = 0.0, dy = 0.0;
      for (std::size_t r = 0; r < kImageSide; ++r) {
        for (std::size_t c = 0; c < kImageSide; ++c) {
          const std::size_t p = r * kImageSide + c;
          if (!mask[p]) continue;
          const double pred = amp * ay[k].profile[r] * ax[k].profile[c];
          // d loglik / d pred = residual / sigma^2; d pred / d centre = pred * offset / s^2
          const double w = (image[p] - pred) * inv_var * pred * inv_psf;
          dx += w * (static_cast<double>(c) - ax[k].centre);
          dy += w * (static_cast<double>(r) - ay[k].centre);
        }
      }
      gs[k * d] += g[k] * dx * ax[k].dcentre;
      gs[k * d + 1] += g[k] * dy * ay[k].dcentre;
    }
  });
}

}  // namespace dvsmc::ssm
