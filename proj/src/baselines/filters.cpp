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


#include "dvsmc/baselines/filters.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "dvsmc/autodiff/ops.hpp"
#include "dvsmc/distributions/gmm.hpp"

namespace dvsmc::baselines {

using ad::Tensor;

Matrix6 ConstantVelocity::transition() const {
  Matrix6 f = Matrix6::Identity();
  f.topRightCorner<3, 3>() = dt * Eigen::Matrix3d::Identity();
  return f;
}

Matrix6 ConstantVelocity::noise_covariance() const {
  Matrix6 q = Matrix6::Zero();
  for (int i = 0; i < 3; ++i) {
    q(i, i) = position_noise * position_noise;
    q(i + 3, i + 3) = velocity_noise * velocity_noise;
  }
  return q;
}

Tensor baseline_particles(const ssm::StateVector& initial, std::size_t n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> out(n * kAugmentedDim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) out[i * kAugmentedDim + j] = initial[j] + g(rng);
    for (std::size_t j = 3; j < kAugmentedDim; ++j) out[i * kAugmentedDim + j] = g(rng);
  }
  return Tensor({n, kAugmentedDim}, std::move(out));
}

smc::StepModel bpf_model(const std::vector<ssm::ObservationFrame>& frames, double sigma_v,
                         const ConstantVelocity& cv) {
  const Matrix6 f = cv.transition();
  std::vector<double> ft(kAugmentedDim * kAugmentedDim);
  for (std::size_t r = 0; r < kAugmentedDim; ++r) {
    for (std::size_t c = 0; c < kAugmentedDim; ++c) ft[r * kAugmentedDim + c] = f(static_cast<int>(c), static_cast<int>(r));
  }
  const Tensor f_t({kAugmentedDim, kAugmentedDim}, std::move(ft));
  const double lp = std::log(cv.position_noise * cv.position_noise);
  const double lv = std::log(cv.velocity_noise * cv.velocity_noise);
  const Tensor log_var({1, kAugmentedDim}, {lp, lp, lp, lv, lv, lv});
  smc::StepModel m;
  m.transition = [f_t, log_var](const Tensor& prev, std::size_t) {
    const Tensor mean = ad::matmul(prev, f_t);
    return dist::single_gaussian(mean, log_var + Tensor::zeros(mean.shape()));
  };
  m.log_likelihood = [frames, sigma_v](const Tensor& z, std::size_t t) {
    return ssm::log_likelihood(z, frames.at(t), sigma_v);
  };
  return m;
}

smc::StepResult bpf_step(const smc::Ensemble& ensemble, const ssm::ObservationFrame& frame, double sigma_v,
                         const smc::FilterConfig& config, Rng& rng, const ConstantVelocity& cv) {
  return smc::filter_step(ensemble, bpf_model({frame}, sigma_v, cv), 0, config, rng);
}

smc::FilterRun run_bpf(const ssm::Trajectory& sequence, const ssm::StateVector& initial, std::size_t particles,
                       Rng& rng, const ConstantVelocity& cv) {
  const smc::Ensemble init = smc::Ensemble::uniform(baseline_particles(initial, particles, rng));
  return smc::run_filter(sequence.length(), bpf_model(sequence.frames, sequence.sigma_v, cv),
                         smc::FilterConfig::with_particles(particles), init, rng);
}

EkfBelief baseline_belief(const ssm::StateVector& initial) {
  EkfBelief b;
  b.mean << initial[0], initial[1], initial[2], 0.0, 0.0, 0.0;
  return b;
}

EkfBelief ekf_predict(const EkfBelief& belief, const ConstantVelocity& cv) {
  const Matrix6 f = cv.transition();
  EkfBelief out;
  out.mean = f * belief.mean;
  out.cov = f * belief.cov * f.transpose() + cv.noise_covariance();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

namespace {

Tensor replicate(const AugmentedState& x, std::size_t rows) {
  std::vector<double> rep(rows * kAugmentedDim);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < kAugmentedDim; ++j) rep[i * kAugmentedDim + j] = x(static_cast<int>(j));
  }
  return Tensor({rows, kAugmentedDim}, std::move(rep));
}

void check_output(const Tensor& out, std::size_t outputs) {
  if (out.rank() != 1 || out.dim(0) != outputs) {
    throw ad::ShapeError("measurement: expected [" + std::to_string(outputs) + "], got " + ad::to_string(out.shape()));
  }
}

}  // namespace

Eigen::VectorXd evaluate_measurement(const MeasurementFn& h, const AugmentedState& x, std::size_t outputs) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(outputs));
  if (outputs == 0) return y;
  const Tensor out = h(replicate(x, outputs));
  check_output(out, outputs);
  for (std::size_t i = 0; i < outputs; ++i) y(static_cast<Eigen::Index>(i)) = out.data()[i];
  return y;
}

Eigen::MatrixXd measurement_jacobian(const MeasurementFn& h, const AugmentedState& x, std::size_t outputs) {
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(outputs), 6);
  if (outputs == 0) return jac;
  ad::Tape tape;
  const Tensor rows = tape.watch(replicate(x, outputs));
  const Tensor out = h(rows);
  check_output(out, outputs);
  // Output i depends on row i only, so the gradient of the sum holds J row by row.
  tape.backward(ad::sum(out));
  const auto g = tape.grad(rows);
  for (std::size_t i = 0; i < outputs; ++i) {
    for (std::size_t j = 0; j < kAugmentedDim; ++j) {
      jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g[i * kAugmentedDim + j];
    }
  }
  return jac;
}

EkfBelief ekf_update(const EkfBelief& predicted, const Eigen::VectorXd& y, const MeasurementFn& h, double sigma) {
  const auto m = static_cast<std::size_t>(y.size());
  if (m == 0) return predicted;
  if (!(sigma > 0.0)) throw std::invalid_argument("ekf_update: sigma must be positive");
  const Eigen::MatrixXd jac = measurement_jacobian(h, predicted.mean, m);
  const Eigen::VectorXd residual = y - evaluate_measurement(h, predicted.mean, m);

  const Matrix6& p = predicted.cov;
  const Matrix6 jtj = jac.transpose() * jac;
  const double s2 = sigma * sigma;
  const Eigen::PartialPivLU<Matrix6> lu(s2 * Matrix6::Identity() + p * jtj);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw std::domain_error("ekf_update: innovation system is singular (rcond " + std::to_string(rcond) + ")");
  }
  const Matrix6 x = lu.inverse();
  // K = P X^T J^T.
  const Matrix6 pxt = p * x.transpose();
  const Matrix6 kh = pxt * jtj;
  EkfBelief out;
  out.mean = predicted.mean + pxt * (jac.transpose() * residual);
  const Matrix6 a = Matrix6::Identity() - kh;
  out.cov = a * p * a.transpose() + s2 * pxt * jtj * pxt.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

EkfBelief ekf_step(const EkfBelief& belief, const ssm::ObservationFrame& frame, double sigma_v,
                   const ConstantVelocity& cv, const ssm::PsfConfig& psf) {
  const EkfBelief pred = ekf_predict(belief, cv);
  std::vector<std::size_t> observed;
  for (std::size_t p = 0; p < ssm::kPixels; ++p) {
    if (frame.mask.at(p)) observed.push_back(p);
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(observed.size()));
  for (std::size_t i = 0; i < observed.size(); ++i) y(static_cast<Eigen::Index>(i)) = frame.image[observed[i]];
  const MeasurementFn h = [observed, psf](const Tensor& rows) { return ssm::render_pixels(rows, observed, psf); };
  return ekf_update(pred, y, h, sigma_v);
}

EkfRun run_ekf(const ssm::Trajectory& sequence, const ssm::StateVector& initial, const ConstantVelocity& cv) {
  EkfRun run;
  run.trace.particles = 1;
  run.trace.dim = kAugmentedDim;
  EkfBelief b = baseline_belief(initial);
  double cumulative = 0.0;
  for (std::size_t t = 0; t < sequence.length(); ++t) {
    b = ekf_step(b, sequence.frames[t], sequence.sigma_v, cv);
    run.trace.states.emplace_back(b.mean.data(), b.mean.data() + kAugmentedDim);
    run.trace.weights.push_back({1.0});
    run.trace.increments.push_back(0.0);
    run.trace.cumulative.push_back(cumulative);
    run.trace.ess.push_back(1.0);
    run.trace.resampled.push_back(false);
    run.trace.transport_converged.push_back(true);
    run.covariances.push_back(b.cov);
  }
  return run;
}

}  // namespace dvsmc::baselines
