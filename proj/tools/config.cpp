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


#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace dvsmc::cli {
namespace {

class Section {
 public:
  Section(const toml::table* table, std::string name, std::set<std::string> keys)
      : table_(table), name_(std::move(name)) {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!keys.count(std::string(k.str()))) throw ConfigError("unknown key '" + qualified(std::string(k.str())) + "'");
    }
  }

  void get(const char* key, std::size_t& out) const {
    if (const auto* n = node(key)) {
      const auto v = n->value<std::int64_t>();
      if (!n->is_integer() || !v || *v < 0) throw ConfigError(qualified(key) + " must be a non-negative integer");
      out = static_cast<std::size_t>(*v);
    }
  }
  void get(const char* key, int& out) const {
    std::size_t v = static_cast<std::size_t>(out);
    get(key, v);
    out = static_cast<int>(v);
  }
  void get(const char* key, double& out) const {
    if (const auto* n = node(key)) {
      const auto v = n->value<double>();
      if (!(n->is_floating_point() || n->is_integer()) || !v) throw ConfigError(qualified(key) + " must be a number");
      out = *v;
    }
  }
  void get(const char* key, bool& out) const {
    if (const auto* n = node(key)) {
      if (!n->is_boolean()) throw ConfigError(qualified(key) + " must be true or false");
      out = *n->value<bool>();
    }
  }
  void get(const char* key, std::string& out) const {
    if (const auto* n = node(key)) {
      if (!n->is_string()) throw ConfigError(qualified(key) + " must be a string");
      out = *n->value<std::string>();
    }
  }
  void get(const char* key, std::vector<double>& out) const {
    if (const auto* n = node(key)) {
      const auto* arr = n->as_array();
      if (!arr) throw ConfigError(qualified(key) + " must be an array of numbers");
      out.clear();
      for (const auto& e : *arr) {
        const auto v = e.value<double>();
        if (!v || !(e.is_floating_point() || e.is_integer())) throw ConfigError(qualified(key) + " must hold numbers");
        out.push_back(*v);
      }
    }
  }
  void get(const char* key, std::vector<std::string>& out) const {
    if (const auto* n = node(key)) {
      const auto* arr = n->as_array();
      if (!arr) throw ConfigError(qualified(key) + " must be an array of strings");
      out.clear();
      for (const auto& e : *arr) {
        if (!e.is_string()) throw ConfigError(qualified(key) + " must hold strings");
        out.push_back(*e.value<std::string>());
      }
    }
  }
  void get(const char* key, std::vector<training::CurriculumStage>& out) const {
    if (const auto* n = node(key)) {
      const auto* arr = n->as_array();
      if (!arr) throw ConfigError(qualified(key) + " must be an array of [epoch, length] pairs");
      out.clear();
      for (const auto& e : *arr) {
        const auto* pair = e.as_array();
        if (!pair || pair->size() != 2 || !(*pair)[0].is_integer() || !(*pair)[1].is_integer() ||
            *(*pair)[0].value<std::int64_t>() < 0 || *(*pair)[1].value<std::int64_t>() < 1) {
          throw ConfigError(qualified(key) + " entries must be [epoch >= 0, length >= 1]");
        }
        out.push_back({static_cast<std::size_t>(*(*pair)[0].value<std::int64_t>()),
                       static_cast<std::size_t>(*(*pair)[1].value<std::int64_t>())});
      }
    }
  }

 private:
  const toml::node* node(const char* key) const { return table_ ? table_->get(key) : nullptr; }
  std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const toml::table* table_;
  std::string name_;
};

const toml::table* subtable(const toml::table& root, const char* name) {
  const toml::node* n = root.get(name);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError(std::string("[") + name + "] must be a table");
  return n->as_table();
}

template <class T>
toml::array to_array(const std::vector<T>& v) {
  toml::array a;
  for (const auto& x : v) a.push_back(x);
  return a;
}

}  // namespace

std::string to_string(Regime r) { return r == Regime::kNoise ? "noise" : "partial"; }

Regime parse_regime(const std::string& name) {
  if (name == "noise") return Regime::kNoise;
  if (name == "partial") return Regime::kPartial;
  throw ConfigError("unknown regime '" + name + "' (expected noise or partial)");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(msg.str());
  }
  ExperimentConfig c;
  const Section top(&root, "", {"seed", "out", "regimes", "data", "noise", "partial", "network", "train", "sinkhorn",
                                "evaluate", "prior", "baselines"});
  top.get("seed", c.seed);
  std::string out = c.out.string();
  top.get("out", out);
  c.out = out;
  std::vector<std::string> regimes;
  top.get("regimes", regimes);
  if (root.get("regimes")) {
    c.regimes.clear();
    for (const auto& r : regimes) c.regimes.push_back(parse_regime(r));
  }

  const Section data(subtable(root, "data"), "data",
                     {"train_sequences", "train_length", "val_sequences", "val_length", "dt", "process_noise"});
  data.get("train_sequences", c.train_sequences);
  data.get("train_length", c.train_length);
  data.get("val_sequences", c.val_sequences);
  data.get("val_length", c.val_length);
  data.get("dt", c.lorenz.dt);
  data.get("process_noise", c.lorenz.process_noise);

  const Section noise(subtable(root, "noise"), "noise", {"sigma_v_grid", "proportion"});
  noise.get("sigma_v_grid", c.noise_grid);
  noise.get("proportion", c.noise_proportion);
  const Section partial(subtable(root, "partial"), "partial", {"proportion_grid", "sigma_v"});
  partial.get("proportion_grid", c.partial_grid);
  partial.get("sigma_v", c.partial_sigma_v);

  const Section net(subtable(root, "network"), "network",
                    {"components", "encoding", "hidden", "mlp_layers", "base_channels", "state_scale"});
  net.get("components", c.network.components);
  net.get("encoding", c.network.encoding);
  net.get("hidden", c.network.hidden);
  net.get("mlp_layers", c.network.mlp_layers);
  net.get("base_channels", c.network.base_channels);
  net.get("state_scale", c.network.state_scale);

  const Section train(subtable(root, "train"), "train",
                      {"epochs", "batch_size", "learning_rate", "weight_decay", "particles", "curriculum",
                       "max_grad_norm", "supervised_epochs", "validation_sequences"});
  train.get("epochs", c.train.epochs);
  train.get("batch_size", c.train.batch_size);
  train.get("learning_rate", c.train.learning_rate);
  train.get("weight_decay", c.train.weight_decay);
  train.get("particles", c.train.particles);
  train.get("curriculum", c.train.curriculum);
  train.get("max_grad_norm", c.train.max_grad_norm);
  train.get("supervised_epochs", c.supervised_epochs);
  train.get("validation_sequences", c.validation_sequences);

  const Section sk(subtable(root, "sinkhorn"), "sinkhorn", {"epsilon", "max_iterations", "tolerance"});
  sk.get("epsilon", c.train.sinkhorn.epsilon);
  sk.get("max_iterations", c.train.sinkhorn.max_iterations);
  sk.get("tolerance", c.train.sinkhorn.tolerance);

  const Section ev(subtable(root, "evaluate"), "evaluate",
                   {"methods", "num_seeds", "particles_10x", "elbo", "mc_samples"});
  ev.get("methods", c.methods);
  ev.get("num_seeds", c.num_seeds);
  ev.get("particles_10x", c.particles_10x);
  ev.get("elbo", c.elbo);
  ev.get("mc_samples", c.mc_samples);

  const Section pr(subtable(root, "prior"), "prior", {"length", "burn_in", "spacing"});
  pr.get("length", c.prior.length);
  pr.get("burn_in", c.prior.burn_in);
  pr.get("spacing", c.prior.spacing);

  const Section bl(subtable(root, "baselines"), "baselines", {"position_noise", "velocity_noise"});
  bl.get("position_noise", c.cv.position_noise);
  bl.get("velocity_noise", c.cv.velocity_noise);
  c.cv.dt = c.lorenz.dt;

  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path.string());
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (regimes.empty()) fail("regimes must not be empty");
  if (noise_grid.empty() || partial_grid.empty()) fail("condition grids must not be empty");
  for (double s : noise_grid) {
    if (!(s > 0.0)) fail("noise.sigma_v_grid values must be positive");
  }
  for (double p : partial_grid) {
    if (!(p >= 0.0 && p <= 1.0)) fail("partial.proportion_grid values must lie in [0, 1]");
  }
  if (!(noise_proportion >= 0.0 && noise_proportion <= 1.0)) fail("noise.proportion must lie in [0, 1]");
  if (!(partial_sigma_v > 0.0)) fail("partial.sigma_v must be positive");
  if (train_sequences == 0 || train_length == 0 || val_sequences == 0 || val_length == 0) {
    fail("data sizes must be positive");
  }
  if (!(lorenz.dt > 0.0) || !(lorenz.process_noise >= 0.0)) fail("data.dt must be positive, data.process_noise >= 0");
  if (network.components == 0 || network.encoding == 0 || network.hidden == 0 || network.mlp_layers < 2 ||
      network.base_channels == 0 || !(network.state_scale > 0.0)) {
    fail("network sizes must be positive and mlp_layers >= 2");
  }
  try {
    train.validate(train_sequences);
  } catch (const std::invalid_argument& e) {
    fail(std::string("train: ") + e.what());
  }
  for (const auto& s : train.schedule()) {
    if (s.length > train_length) fail("train.curriculum lengths must not exceed data.train_length");
  }
  if (validation_sequences > val_sequences) fail("train.validation_sequences exceeds data.val_sequences");
  if (methods.empty()) fail("evaluate.methods must not be empty");
  for (const auto& m : methods) {
    if (!eval::is_known_method(m)) fail("unknown method '" + m + "' (expected dpf, bpf, bpf10x, ekf, supervised)");
  }
  if (num_seeds < 2) fail("evaluate.num_seeds must be at least 2");
  if (mc_samples < 2) fail("evaluate.mc_samples must be at least 2");
  if (particles_10x == 0) fail("evaluate.particles_10x must be positive");
  if (prior.length < 2 || !(prior.spacing > 0.0)) fail("prior.length must be >= 2 and prior.spacing positive");
  if (!(cv.position_noise >= 0.0 && cv.velocity_noise >= 0.0)) fail("baselines noise must be non-negative");
  if (!(train.sinkhorn.epsilon > 0.0) || train.sinkhorn.max_iterations == 0) fail("sinkhorn settings invalid");
}

std::string ExperimentConfig::to_toml() const {
  toml::array reg;
  for (auto r : regimes) reg.push_back(to_string(r));
  toml::array curriculum;
  for (const auto& s : train.schedule()) {
    curriculum.push_back(toml::array{static_cast<std::int64_t>(s.epoch), static_cast<std::int64_t>(s.length)});
  }
  auto i64 = [](std::size_t v) { return static_cast<std::int64_t>(v); };
  toml::table t{
      {"seed", static_cast<std::int64_t>(seed)},
      {"out", out.string()},
      {"regimes", reg},
      {"data", toml::table{{"train_sequences", i64(train_sequences)},
                           {"train_length", i64(train_length)},
                           {"val_sequences", i64(val_sequences)},
                           {"val_length", i64(val_length)},
                           {"dt", lorenz.dt},
                           {"process_noise", lorenz.process_noise}}},
      {"noise", toml::table{{"sigma_v_grid", to_array(noise_grid)}, {"proportion", noise_proportion}}},
      {"partial", toml::table{{"proportion_grid", to_array(partial_grid)}, {"sigma_v", partial_sigma_v}}},
      {"network", toml::table{{"components", i64(network.components)},
                              {"encoding", i64(network.encoding)},
                              {"hidden", i64(network.hidden)},
                              {"mlp_layers", i64(network.mlp_layers)},
                              {"base_channels", i64(network.base_channels)},
                              {"state_scale", network.state_scale}}},
      {"train", toml::table{{"epochs", i64(train.epochs)},
                            {"batch_size", i64(train.batch_size)},
                            {"learning_rate", train.learning_rate},
                            {"weight_decay", train.weight_decay},
                            {"particles", i64(train.particles)},
                            {"curriculum", curriculum},
                            {"max_grad_norm", train.max_grad_norm},
                            {"supervised_epochs", i64(supervised_epochs)},
                            {"validation_sequences", i64(validation_sequences)}}},
      {"sinkhorn", toml::table{{"epsilon", train.sinkhorn.epsilon},
                               {"max_iterations", i64(train.sinkhorn.max_iterations)},
                               {"tolerance", train.sinkhorn.tolerance}}},
      {"evaluate", toml::table{{"methods", to_array(methods)},
                               {"num_seeds", i64(num_seeds)},
                               {"particles_10x", i64(particles_10x)},
                               {"elbo", elbo},
                               {"mc_samples", i64(mc_samples)}}},
      {"prior", toml::table{{"length", i64(prior.length)}, {"burn_in", i64(prior.burn_in)}, {"spacing", prior.spacing}}},
      {"baselines", toml::table{{"position_noise", cv.position_noise}, {"velocity_noise", cv.velocity_noise}}},
  };
  std::ostringstream s;
  s << t << '\n';
  return s.str();
}

std::vector<std::uint64_t> ExperimentConfig::eval_seeds() const {
  std::vector<std::uint64_t> s(num_seeds);
  for (std::size_t i = 0; i < num_seeds; ++i) s[i] = seed * 1000 + i;
  return s;
}

ssm::NoiseSettings ExperimentConfig::settings(Regime r) const {
  ssm::NoiseSettings s;
  if (r == Regime::kNoise) {
    s.sigma_v_grid = noise_grid;
    s.proportion_grid = {noise_proportion};
  } else {
    s.sigma_v_grid = {partial_sigma_v};
    s.proportion_grid = partial_grid;
  }
  return s;
}

eval::EvalConfig ExperimentConfig::eval_config(Regime r) const {
  eval::EvalConfig e;
  e.sweep = r == Regime::kNoise ? eval::Sweep::kNoise : eval::Sweep::kPartial;
  e.conditions = r == Regime::kNoise ? noise_grid : partial_grid;
  e.fixed_proportion = noise_proportion;
  e.fixed_sigma_v = partial_sigma_v;
  e.methods = methods;
  e.seeds = eval_seeds();
  e.particles = train.particles;
  e.particles_10x = particles_10x;
  e.elbo = elbo;
  e.elbo_config.mc_samples = mc_samples;
  e.cv = cv;
  return e;
}

std::uint64_t ExperimentConfig::data_seed(Regime r, bool validation) const {
  return derive_seed(seed, {static_cast<std::uint64_t>(r), validation ? 2u : 1u});
}

std::uint64_t ExperimentConfig::model_seed(Regime r) const { return derive_seed(seed, {static_cast<std::uint64_t>(r), 3}); }

std::filesystem::path ExperimentConfig::dataset_path(Regime r, bool validation) const {
  return out / "data" / to_string(r) / (validation ? "val.dvd" : "train.dvd");
}

std::filesystem::path ExperimentConfig::checkpoint_path(Regime r, const std::string& model) const {
  return out / "checkpoints" / to_string(r) / (model + ".ckpt");
}

std::filesystem::path ExperimentConfig::report_path(Regime r, const std::string& model) const {
  return out / "checkpoints" / to_string(r) / (model + "_report.csv");
}

std::filesystem::path ExperimentConfig::eval_dir(Regime r) const { return out / "eval" / to_string(r); }
std::filesystem::path ExperimentConfig::plot_dir() const { return out / "plots"; }
std::filesystem::path ExperimentConfig::log_dir() const { return out / "logs"; }

}  // namespace dvsmc::cli
