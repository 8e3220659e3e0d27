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


#include "dvsmc/models/networks.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "dvsmc/autodiff/ops.hpp"
#include "dvsmc/io/archive.hpp"

namespace dvsmc::models {

using ad::Tensor;

namespace {

Tensor uniform_tensor(ad::Shape shape, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<double> v(ad::numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v));
}

// He-uniform on fan-in; zero bias.
void add_linear(ad::ParameterSet& p, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                bool zero = false) {
  p.add(name + ".weight", zero ? Tensor::zeros({in, out}) : uniform_tensor({in, out}, std::sqrt(6.0 / in), rng));
  p.add(name + ".bias", Tensor::zeros({out}));
}

void add_conv(ad::ParameterSet& p, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  p.add(name + ".weight", uniform_tensor({out, in, 3, 3}, std::sqrt(6.0 / (in * 9)), rng));
  p.add(name + ".bias", Tensor::zeros({out}));
}

std::size_t flat_size(const NetworkConfig& c) {
  std::size_t side = ssm::kImageSide;
  for (int i = 0; i < 3; ++i) side /= 2;
  return 4 * c.base_channels * side * side;
}

void add_encoder(ad::ParameterSet& p, const std::string& net, const NetworkConfig& c, Rng& rng) {
  add_conv(p, net + ".encoder.conv1", 2, c.base_channels, rng);
  add_conv(p, net + ".encoder.conv2", c.base_channels, 2 * c.base_channels, rng);
  add_conv(p, net + ".encoder.conv3", 2 * c.base_channels, 4 * c.base_channels, rng);
  add_linear(p, net + ".encoder.fc", flat_size(c), c.encoding, rng);
}

void add_mlp(ad::ParameterSet& p, const std::string& net, const NetworkConfig& c, std::size_t in, std::size_t out,
             bool zero_last, Rng& rng) {
  if (c.mlp_layers < 1) throw std::invalid_argument("NetworkConfig: mlp_layers must be >= 1");
  for (std::size_t i = 0; i < c.mlp_layers; ++i) {
    const bool last = i + 1 == c.mlp_layers;
    add_linear(p, net + ".mlp." + std::to_string(i), i == 0 ? in : c.hidden, last ? out : c.hidden, rng,
               last && zero_last);
  }
}

Tensor linear(const ad::ParameterSet& p, const std::string& name, const Tensor& x) {
  return ad::matmul(x, p.at(name + ".weight")) + p.at(name + ".bias");
}

Tensor conv_block(const ad::ParameterSet& p, const std::string& name, const Tensor& x) {
  const Tensor& b = p.at(name + ".bias");
  const Tensor y = ad::conv2d(x, p.at(name + ".weight")) + ad::reshape(b, {1, b.dim(0), 1, 1});
  return ad::maxpool2x2(ad::relu(y));
}

// Applies layers 1..L-1 of an MLP to the first-layer pre-activation h.
Tensor mlp_tail(const ad::ParameterSet& p, const std::string& net, const NetworkConfig& c, Tensor h) {
  for (std::size_t i = 1; i < c.mlp_layers; ++i) h = linear(p, net + ".mlp." + std::to_string(i), ad::relu(h));
  return h;
}

void check_prev(const NetworkConfig& c, const Tensor& prev) {
  if (prev.rank() != 2 || prev.dim(1) != c.state_dim) {
    throw ad::ShapeError("expected states [N, " + std::to_string(c.state_dim) + "], got " + ad::to_string(prev.shape()));
  }
}

}  // namespace

nlohmann::json NetworkConfig::to_json() const {
  return {{"state_dim", state_dim}, {"components", components}, {"encoding", encoding},          {"hidden", hidden},
          {"mlp_layers", mlp_layers}, {"base_channels", base_channels}, {"state_scale", state_scale}};
}

NetworkConfig NetworkConfig::from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.state_dim = j.at("state_dim").get<std::size_t>();
  c.components = j.at("components").get<std::size_t>();
  c.encoding = j.at("encoding").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.mlp_layers = j.at("mlp_layers").get<std::size_t>();
  c.base_channels = j.at("base_channels").get<std::size_t>();
  c.state_scale = j.at("state_scale").get<double>();
  return c;
}

ad::ParameterSet init_dpf(const NetworkConfig& c, std::uint64_t seed) {
  ad::ParameterSet p;
  Rng enc = make_rng(seed, {0}), prop = make_rng(seed, {1}), trans = make_rng(seed, {2});
  add_encoder(p, "proposal", c, enc);
  add_mlp(p, "proposal", c, c.state_dim + c.encoding, c.raw_size(), true, prop);
  add_mlp(p, "transition", c, c.state_dim, c.raw_size(), true, trans);
  return p;
}

ad::ParameterSet init_supervised(const NetworkConfig& c, std::uint64_t seed) {
  ad::ParameterSet p;
  Rng enc = make_rng(seed, {0}), mlp = make_rng(seed, {1});
  add_encoder(p, "supervised", c, enc);
  add_mlp(p, "supervised", c, c.encoding, c.state_dim, false, mlp);
  return p;
}

Tensor encoder_input(const std::vector<ssm::ObservationFrame>& frames) {
  const std::size_t b = frames.size(), px = ssm::kPixels;
  std::vector<double> v(b * 2 * px);
  for (std::size_t i = 0; i < b; ++i) {
    const auto& f = frames[i];
    if (f.image.size() != px || f.mask.size() != px) throw ad::ShapeError("encoder_input: frame must be 28x28");
    for (std::size_t k = 0; k < px; ++k) {
      v[(2 * i) * px + k] = f.mask[k] ? f.image[k] : 0.0;
      v[(2 * i + 1) * px + k] = f.mask[k];
    }
  }
  return Tensor({b, 2, ssm::kImageSide, ssm::kImageSide}, std::move(v));
}

Tensor encoder_input(const ssm::ObservationFrame& frame) { return encoder_input(std::vector{frame}); }

Tensor encode(const ad::ParameterSet& p, const NetworkConfig& c, const std::string& net, const Tensor& input) {
  if (input.rank() != 4 || input.dim(1) != 2 || input.dim(2) != ssm::kImageSide || input.dim(3) != ssm::kImageSide) {
    throw ad::ShapeError("encode: expected [B, 2, 28, 28], got " + ad::to_string(input.shape()));
  }
  Tensor h = conv_block(p, net + ".encoder.conv1", input);
  h = conv_block(p, net + ".encoder.conv2", h);
  h = conv_block(p, net + ".encoder.conv3", h);
  h = ad::reshape(h, {input.dim(0), flat_size(c)});
  return linear(p, net + ".encoder.fc", h);
}

Tensor proposal_raw(const ad::ParameterSet& p, const NetworkConfig& c, const Tensor& prev, const Tensor& encoding) {
  check_prev(c, prev);
  if (encoding.rank() != 2 || encoding.dim(0) != 1 || encoding.dim(1) != c.encoding) {
    throw ad::ShapeError("proposal_raw: expected encoding [1, " + std::to_string(c.encoding) + "], got " +
                         ad::to_string(encoding.shape()));
  }
  // First layer split by input block so the encoding term is computed once.
  const Tensor& w = p.at("proposal.mlp.0.weight");
  const Tensor state_part = ad::matmul(prev * (1.0 / c.state_scale), ad::slice(w, 0, 0, c.state_dim));
  const Tensor enc_part = ad::matmul(encoding, ad::slice(w, 0, c.state_dim, c.state_dim + c.encoding));
  return mlp_tail(p, "proposal", c, state_part + (enc_part + p.at("proposal.mlp.0.bias")));
}

Tensor transition_raw(const ad::ParameterSet& p, const NetworkConfig& c, const Tensor& prev) {
  check_prev(c, prev);
  return mlp_tail(p, "transition", c, linear(p, "transition.mlp.0", prev * (1.0 / c.state_scale)));
}

dist::GmmParams to_gmm(const NetworkConfig& c, const Tensor& raw, const Tensor& prev) {
  dist::GmmParams g = dist::parse_gmm(raw, c.components, c.state_dim);
  g.means = ad::reshape(prev, {prev.dim(0), 1, c.state_dim}) + ad::tanh(g.means) * c.state_scale;
  return g;
}

dist::GmmParams propose_params(const ad::ParameterSet& p, const NetworkConfig& c, const Tensor& prev,
                               const Tensor& encoding) {
  return to_gmm(c, proposal_raw(p, c, prev, encoding), prev);
}

dist::GmmParams transition_params(const ad::ParameterSet& p, const NetworkConfig& c, const Tensor& prev) {
  return to_gmm(c, transition_raw(p, c, prev), prev);
}

Tensor supervised_predict(const ad::ParameterSet& p, const NetworkConfig& c, const Tensor& input) {
  const Tensor enc = encode(p, c, "supervised", input);
  return mlp_tail(p, "supervised", c, linear(p, "supervised.mlp.0", enc)) * c.state_scale;
}

ssm::StateVector supervised_predict(const ad::ParameterSet& p, const NetworkConfig& c,
                                    const ssm::ObservationFrame& frame) {
  const Tensor out = supervised_predict(p, c, encoder_input(frame));
  if (c.state_dim != ssm::kStateDim) throw std::invalid_argument("supervised_predict: state_dim must be 3");
  return {out[0], out[1], out[2]};
}

smc::StepModel dpf_step_model(const ad::ParameterSet& p, const NetworkConfig& c,
                              const std::vector<ssm::ObservationFrame>& frames, double sigma_v) {
  const Tensor encodings = encode(p, c, "proposal", encoder_input(frames));
  smc::StepModel m;
  m.proposal = [p, c, encodings](const Tensor& prev, std::size_t t) {
    return propose_params(p, c, prev, ad::slice(encodings, 0, t, t + 1));
  };
  m.transition = [p, c](const Tensor& prev, std::size_t) { return transition_params(p, c, prev); };
  m.log_likelihood = [frames, sigma_v](const Tensor& z, std::size_t t) {
    return ssm::log_likelihood(z, frames.at(t), sigma_v);
  };
  return m;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  io::Archive a;
  a.kind = "checkpoint";
  a.meta = ck.meta;
  a.meta["network"] = ck.config.to_json();
  a.meta["parameters"] = ck.params.names();
  for (std::size_t i = 0; i < ck.params.size(); ++i) a.put(ck.params.names()[i], ck.params.values()[i]);
  if (ck.optimizer) {
    const auto& oc = ck.optimizer->config();
    a.meta["adamw"] = {{"learning_rate", oc.learning_rate}, {"beta1", oc.beta1},     {"beta2", oc.beta2},
                       {"epsilon", oc.epsilon},             {"weight_decay", oc.weight_decay}};
    ck.optimizer->save(a, ck.params, "adamw/");
  }
  a.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const io::Archive a = io::Archive::load(path);
  if (a.kind != "checkpoint") throw io::FormatError(path.string() + ": expected a checkpoint, got '" + a.kind + "'");
  Checkpoint ck;
  ck.meta = a.meta;
  ck.config = NetworkConfig::from_json(a.meta.at("network"));
  for (const auto& name : a.meta.at("parameters")) ck.params.add(name.get<std::string>(), a.get(name.get<std::string>()));
  if (a.meta.contains("adamw")) {
    const auto& j = a.meta.at("adamw");
    ad::AdamWConfig oc;
    oc.learning_rate = j.at("learning_rate").get<double>();
    oc.beta1 = j.at("beta1").get<double>();
    oc.beta2 = j.at("beta2").get<double>();
    oc.epsilon = j.at("epsilon").get<double>();
    oc.weight_decay = j.at("weight_decay").get<double>();
    ck.optimizer.emplace(oc);
    ck.optimizer->load(a, ck.params, "adamw/");
  }
  ck.meta.erase("network");
  ck.meta.erase("parameters");
  ck.meta.erase("adamw");
  ck.meta.erase("adamw/step");
  return ck;
}

}  // namespace dvsmc::models
