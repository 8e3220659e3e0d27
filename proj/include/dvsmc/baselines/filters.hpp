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

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dvsmc/autodiff/tensor.hpp"
#include "dvsmc/smc/filter.hpp"
#include "dvsmc/ssm/dataset.hpp"
#include "dvsmc/ssm/measurement.hpp"

// Reference filters with an augmented (position, velocity) state and a
// constant-velocity transition.
namespace dvsmc::baselines {

inline constexpr std::size_t kAugmentedDim = 6;

using AugmentedState = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

struct ConstantVelocity {
  double dt = 0.02;
  double position_noise = 0.5;  // std per step
  double velocity_noise = 0.5;

  Matrix6 transition() const;
  Matrix6 noise_covariance() const;
};

// ---- bootstrap particle filter ----

// Positions ~ N(initial, I), velocities ~ N(0, I). Returns [n, 6].
ad::Tensor baseline_particles(const ssm::StateVector& initial, std::size_t n, Rng& rng);

// Bootstrap model: propagate by the constant-velocity model and weight by the
// image likelihood of the position.
smc::StepModel bpf_model(const std::vector<ssm::ObservationFrame>& frames, double sigma_v,
                         const ConstantVelocity& cv = {});

smc::StepResult bpf_step(const smc::Ensemble& ensemble, const ssm::ObservationFrame& frame, double sigma_v,
                         const smc::FilterConfig& config, Rng& rng, const ConstantVelocity& cv = {});

// Whole sequence from baseline_particles(initial); systematic resampling.
smc::FilterRun run_bpf(const ssm::Trajectory& sequence, const ssm::StateVector& initial, std::size_t particles,
                       Rng& rng, const ConstantVelocity& cv = {});

// ---- extended Kalman filter ----

struct EkfBelief {
  AugmentedState mean = AugmentedState::Zero();
  Matrix6 cov = Matrix6::Identity();
};

// Position at `initial`, zero velocity, identity covariance.
EkfBelief baseline_belief(const ssm::StateVector& initial);

EkfBelief ekf_predict(const EkfBelief& belief, const ConstantVelocity& cv = {});

// Differentiable measurement in diagonal form: given [M, 6] rows it returns
// [M] whose entry i is measurement component i evaluated at row i.
using MeasurementFn = std::function<ad::Tensor(const ad::Tensor& rows)>;

// h(x) as an [M] vector.
Eigen::VectorXd evaluate_measurement(const MeasurementFn& h, const AugmentedState& x, std::size_t outputs);

// Jacobian [M, 6] of h at x: one reverse pass over M copies of x.
Eigen::MatrixXd measurement_jacobian(const MeasurementFn& h, const AugmentedState& x, std::size_t outputs);

// Update with y = h(z) + N(0, sigma^2 I). The 6x6 system
// (sigma^2 I + P J^T J) X = I replaces the M x M innovation solve, and the
// covariance uses the Joseph form. Throws std::domain_error if the system is
// singular. M = 0 returns the belief unchanged.
EkfBelief ekf_update(const EkfBelief& predicted, const Eigen::VectorXd& y, const MeasurementFn& h, double sigma);

// Predict, then update on the observed pixels of the frame.
EkfBelief ekf_step(const EkfBelief& belief, const ssm::ObservationFrame& frame, double sigma_v,
                   const ConstantVelocity& cv = {}, const ssm::PsfConfig& psf = {});

struct EkfRun {
  // One particle (the mean) with weight 1 per step; evidence fields are zero.
  smc::FilterTrace trace;
  std::vector<Matrix6> covariances;
};

EkfRun run_ekf(const ssm::Trajectory& sequence, const ssm::StateVector& initial, const ConstantVelocity& cv = {});

}  // namespace dvsmc::baselines
