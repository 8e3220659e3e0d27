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

#include "dvsmc/ssm/dataset.hpp"

#include <stdexcept>

#include "dvsmc/io/archive.hpp"
#include "dvsmc/util/parallel.hpp"

namespace dvsmc::ssm {

Trajectory simulate_trajectory(std::size_t length, double sigma_v, double proportion, std::uint64_t seed,
                               const LorenzParams& lorenz) {
  if (length < 1) throw std::invalid_argument("trajectory length must be >= 1");
  Rng rng(seed);
  Trajectory traj;
  traj.seed = seed;
  traj.sigma_v = sigma_v;
  traj.proportion = proportion;
  traj.initial = sample_attractor_state(rng, lorenz);
  StateVector s = traj.initial;
  for (std::size_t t = 0; t < length; ++t) {
    s = lorenz_step(s, lorenz.dt, rng, lorenz);
    traj.states.push_back(s);
    traj.frames.push_back(observe(render(s), sigma_v, proportion, rng));
  }
  return traj;
}

Trajectory reobserve(const Trajectory& truth, double sigma_v, double proportion, std::uint64_t seed) {
  Rng rng(seed);
  Trajectory out = truth;
  out.sigma_v = sigma_v;
  out.proportion = proportion;
  out.seed = seed;
  for (std::size_t t = 0; t < truth.length(); ++t) {
    out.frames[t] = observe(render(truth.states[t]), sigma_v, proportion, rng);
  }
  return out;
}

Dataset generate_dataset(std::size_t count, std::size_t length, const NoiseSettings& settings,
                         std::uint64_t seed, const LorenzParams& lorenz) {
  if (count < 1 || length < 1) throw std::invalid_argument("dataset needs count >= 1 and length >= 1");
  if (settings.sigma_v_grid.empty() || settings.proportion_grid.empty()) {
    throw std::invalid_argument("noise settings need non-empty grids");
  }
  Dataset ds;
  ds.lorenz = lorenz;
  ds.settings = settings;
  ds.seed = seed;
  ds.sequences.resize(count);
  parallel_for(count, [&](std::size_t i) {
    Rng pick = make_rng(seed, {i, 0});
    std::uniform_int_distribution<std::size_t> si(0, settings.sigma_v_grid.size() - 1);
    std::uniform_int_distribution<std::size_t> pi(0, settings.proportion_grid.size() - 1);
    const double sigma_v = settings.sigma_v_grid[si(pick)];
    const double proportion = settings.proportion_grid[pi(pick)];
    ds.sequences[i] = simulate_trajectory(length, sigma_v, proportion, derive_seed(seed, {i, 1}), lorenz);
  });
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  if (ds.sequences.empty()) throw std::invalid_argument("cannot save an empty dataset");
  const std::size_t count = ds.sequences.size();
  const std::size_t length = ds.sequences[0].length();
  std::vector<double> initial, states, frames, masks, sigma, prop, seeds;
  for (const auto& tr : ds.sequences) {
    if (tr.length() != length) throw std::invalid_argument("dataset sequences differ in length");
    initial.insert(initial.end(), tr.initial.begin(), tr.initial.end());
    for (std::size_t t = 0; t < length; ++t) {
      states.insert(states.end(), tr.states[t].begin(), tr.states[t].end());
      frames.insert(frames.end(), tr.frames[t].image.begin(), tr.frames[t].image.end());
      masks.insert(masks.end(), tr.frames[t].mask.begin(), tr.frames[t].mask.end());
    }
    sigma.push_back(tr.sigma_v);
    prop.push_back(tr.proportion);
  }
  io::Archive ar;
  ar.kind = "dataset";
  ar.meta["count"] = count;
  ar.meta["length"] = length;
  ar.meta["seed"] = ds.seed;
  ar.meta["lorenz"] = {{"sigma", ds.lorenz.sigma},
                       {"rho", ds.lorenz.rho},
                       {"beta", ds.lorenz.beta},
                       {"dt", ds.lorenz.dt},
                       {"process_noise", ds.lorenz.process_noise}};
  ar.meta["sigma_v_grid"] = ds.settings.sigma_v_grid;
  ar.meta["proportion_grid"] = ds.settings.proportion_grid;
  std::vector<std::uint64_t> seq_seeds;
  for (const auto& tr : ds.sequences) seq_seeds.push_back(tr.seed);
  ar.meta["sequence_seeds"] = seq_seeds;
  ar.put("initial_states", ad::Tensor({count, kStateDim}, std::move(initial)));
  ar.put("states", ad::Tensor({count, length, kStateDim}, std::move(states)));
  ar.put("frames", ad::Tensor({count, length, kImageSide, kImageSide}, std::move(frames)));
  ar.put("masks", ad::Tensor({count, length, kImageSide, kImageSide}, std::move(masks)));
  ar.put("sigma_v", ad::Tensor({count}, std::move(sigma)));
  ar.put("observe_proportion", ad::Tensor({count}, std::move(prop)));
  ar.save(path);
}

Dataset load_dataset(const std::filesystem::path& path) {
  const auto ar = io::Archive::load(path);
  if (ar.kind != "dataset") throw io::FormatError("'" + path.string() + "' is not a dataset archive");
  const auto count = ar.meta.at("count").get<std::size_t>();
  const auto length = ar.meta.at("length").get<std::size_t>();
  Dataset ds;
  ds.seed = ar.meta.at("seed").get<std::uint64_t>();
  const auto& lz = ar.meta.at("lorenz");
  ds.lorenz = {lz.at("sigma"), lz.at("rho"), lz.at("beta"), lz.at("dt"), lz.at("process_noise")};
  ds.settings.sigma_v_grid = ar.meta.at("sigma_v_grid").get<std::vector<double>>();
  ds.settings.proportion_grid = ar.meta.at("proportion_grid").get<std::vector<double>>();
  const auto seeds = ar.meta.at("sequence_seeds").get<std::vector<std::uint64_t>>();
  const auto initial = ar.get("initial_states").data();
  const auto states = ar.get("states").data();
  const auto frames = ar.get("frames").data();
  const auto masks = ar.get("masks").data();
  const auto sigma = ar.get("sigma_v").data();
  const auto prop = ar.get("observe_proportion").data();
  if (states.size() != count * length * kStateDim || frames.size() != count * length * kPixels) {
    throw io::FormatError("dataset tensors do not match declared count/length");
  }
  ds.sequences.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    Trajectory& tr = ds.sequences[i];
    tr.seed = seeds.at(i);
    tr.sigma_v = sigma[i];
    tr.proportion = prop[i];
    for (std::size_t k = 0; k < kStateDim; ++k) tr.initial[k] = initial[i * kStateDim + k];
    for (std::size_t t = 0; t < length; ++t) {
      const std::size_t st = (i * length + t);
      tr.states.push_back({states[st * 3], states[st * 3 + 1], states[st * 3 + 2]});
      ObservationFrame f;
      f.image.assign(frames.begin() + static_cast<std::ptrdiff_t>(st * kPixels),
                     frames.begin() + static_cast<std::ptrdiff_t>((st + 1) * kPixels));
      f.mask.resize(kPixels);
      for (std::size_t p = 0; p < kPixels; ++p) f.mask[p] = masks[st * kPixels + p] != 0.0 ? 1 : 0;
      tr.frames.push_back(std::move(f));
    }
  }
  return ds;
}

}  // namespace dvsmc::ssm
