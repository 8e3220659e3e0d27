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


#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dvsmc/io/archive.hpp"
#include "dvsmc/smc/filter.hpp"
#include "dvsmc/training/dpf.hpp"
#include "dvsmc/util/parallel.hpp"
#include "plot.hpp"

namespace dvsmc::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kValidationStream = 0x56414c;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

template <class F>
auto load_artifact(const fs::path& path, F&& load) {
  if (!fs::exists(path)) throw MissingArtifact("missing artifact: " + path.string());
  try {
    return load(path);
  } catch (const io::FormatError& e) {
    throw MissingArtifact("malformed artifact " + path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw MissingArtifact("malformed artifact " + path.string() + ": " + e.what());
  }
}

void require_all(const std::vector<fs::path>& paths) {
  std::string missing;
  for (const auto& p : paths) {
    if (!fs::exists(p)) missing += "\n  " + p.string();
  }
  if (!missing.empty()) throw MissingArtifact("missing artifacts:" + missing);
}

// Report rows from an earlier run, used to keep history across resumes.
std::vector<training::EpochRecord> read_report(const fs::path& path, std::size_t before) {
  std::vector<training::EpochRecord> rows;
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) return rows;
  while (std::getline(in, line)) {
    training::EpochRecord r;
    if (std::sscanf(line.c_str(), "%zu,%zu,%lf,%lf,%lf,%lf", &r.epoch, &r.length, &r.objective, &r.grad_norm,
                    &r.seconds, &r.val_error) == 6 &&
        r.epoch < before) {
      rows.push_back(r);
    }
  }
  return rows;
}

double dpf_validation_error(const ad::ParameterSet& params, const models::NetworkConfig& network,
                            const ssm::Dataset& val, std::size_t count, std::size_t particles,
                            const eval::AttractorPrior& prior, std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& seq = val.sequences[i];
    Rng rng = make_rng(seed, {kValidationStream, i});
    const smc::Ensemble init = smc::Ensemble::uniform(prior.sample(particles, rng));
    const auto run = smc::run_filter(seq.length(), models::dpf_step_model(params, network, seq.frames, seq.sigma_v),
                                     smc::FilterConfig::with_particles(particles), init, rng);
    double sum = 0.0;
    for (double e : eval::tracking_errors(run.trace, seq.states)) sum += e;
    total += sum / static_cast<double>(seq.length());
  }
  return total / static_cast<double>(count);
}

double supervised_validation_error(const ad::ParameterSet& params, const models::NetworkConfig& network,
                                   const ssm::Dataset& val, std::size_t count) {
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) total += training::supervised_loss(params, network, val.sequences[i]).item();
  return total / static_cast<double>(count);
}

nlohmann::json history_json(const std::vector<training::EpochRecord>& epochs) {
  nlohmann::json h = nlohmann::json::array();
  for (const auto& e : epochs) {
    h.push_back({{"epoch", e.epoch}, {"length", e.length}, {"objective", e.objective}, {"grad_norm", e.grad_norm}});
  }
  return h;
}

enum class Model { kDpf, kSupervised };

void train_model(Model model, Regime regime, const ExperimentConfig& config, const ssm::Dataset& train_set,
                 const ssm::Dataset& val_set, const eval::AttractorPrior& prior, bool resume, std::ostream& log) {
  const std::string name = model == Model::kDpf ? "dpf" : "supervised";
  const fs::path ckpt_path = config.checkpoint_path(regime, name);
  const fs::path report_path = config.report_path(regime, name);
  const std::uint64_t seed = config.model_seed(regime) + (model == Model::kDpf ? 0 : 1);

  training::TrainConfig tc = config.train;
  tc.seed = seed;
  tc.curriculum = config.train.schedule();
  const std::size_t epochs = model == Model::kDpf ? config.train.epochs : config.supervised_epochs;

  models::Checkpoint ck{config.network, {}, std::nullopt, nlohmann::json::object()};
  training::TrainState state;
  std::vector<training::EpochRecord> history;
  if (resume && fs::exists(ckpt_path)) {
    ck = load_artifact(ckpt_path, models::load_checkpoint);
    if (!ck.optimizer) throw MissingArtifact("checkpoint " + ckpt_path.string() + " has no optimizer state");
    state.params = ck.params;
    state.optimizer = *ck.optimizer;
    state.next_epoch = ck.meta.value("next_epoch", std::size_t{0});
    history = read_report(report_path, state.next_epoch);
    log << "resuming " << name << " (" << to_string(regime) << ") at epoch " << state.next_epoch << "\n";
  } else {
    ad::ParameterSet params = model == Model::kDpf ? models::init_dpf(config.network, seed)
                                                   : models::init_supervised(config.network, seed);
    state = training::initial_state(std::move(params), tc);
  }

  const std::size_t val_count = std::min(config.validation_sequences, val_set.sequences.size());
  training::Validator validate;
  if (val_count > 0) {
    if (model == Model::kDpf) {
      validate = [&](const ad::ParameterSet& p) {
        return dpf_validation_error(p, config.network, val_set, val_count, tc.particles, prior, seed);
      };
    } else {
      validate = [&](const ad::ParameterSet& p) {
        return supervised_validation_error(p, config.network, val_set, val_count);
      };
    }
  }
  const auto builder = training::dpf_problem_builder(
      train_set, config.network, tc.particles, [&](std::size_t n, Rng& rng) { return prior.sample(n, rng); });

  while (state.next_epoch < epochs) {
    tc.epochs = state.next_epoch + 1;
    const auto report = model == Model::kDpf
                            ? training::train(state, train_set.sequences.size(), builder, tc, validate)
                            : training::train_supervised(state, config.network, train_set, tc, validate);
    history.insert(history.end(), report.epochs.begin(), report.epochs.end());
    ck.params = state.params;
    ck.optimizer = state.optimizer;
    ck.meta = {{"model", name},
               {"regime", to_string(regime)},
               {"seed", seed},
               {"next_epoch", state.next_epoch},
               {"history", history_json(history)}};
    fs::create_directories(ckpt_path.parent_path());
    models::save_checkpoint(ck, ckpt_path);
    training::TrainReport full;
    full.epochs = history;
    full.write_csv(report_path);
    if (report.diverged) {
      throw NumericalFailure("training " + name + " (" + to_string(regime) + ") diverged: " + report.failure);
    }
    const auto& e = report.epochs.back();
    char line[200];
    std::snprintf(line, sizeof line, "%s/%s epoch %zu T=%zu objective %.4f grad %.3g val %.4f (%.1fs)\n",
                  to_string(regime).c_str(), name.c_str(), e.epoch, e.length, e.objective, e.grad_norm, e.val_error,
                  e.seconds);
    log << line << std::flush;
  }
  if (!fs::exists(ckpt_path)) {
    // Zero epochs requested: still emit the initial checkpoint.
    ck.params = state.params;
    ck.optimizer = state.optimizer;
    ck.meta = {{"model", name}, {"regime", to_string(regime)}, {"seed", seed}, {"next_epoch", state.next_epoch},
               {"history", history_json(history)}};
    fs::create_directories(ckpt_path.parent_path());
    models::save_checkpoint(ck, ckpt_path);
    training::TrainReport full;
    full.epochs = history;
    full.write_csv(report_path);
  }
}

eval::AttractorPrior build_prior(const ExperimentConfig& config) {
  eval::PriorConfig pc = config.prior;
  pc.seed = derive_seed(config.seed, {0x505249});
  return eval::AttractorPrior::build(pc, config.lorenz);
}

}  // namespace

ExperimentConfig resolve_config(const Overrides& o) {
  ExperimentConfig c = o.config ? ExperimentConfig::load(*o.config) : ExperimentConfig{};
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.methods) c.methods = *o.methods;
  if (o.regime) {
    if (*o.regime == "both") {
      c.regimes = {Regime::kNoise, Regime::kPartial};
    } else {
      c.regimes = {parse_regime(*o.regime)};
    }
  }
  c.validate();
  return c;
}

void log_config(const ExperimentConfig& config, const std::string& command, std::ostream& log) {
  std::ostringstream text;
  text << "# dvsmc " << command << "\n# threads = " << thread_count() << "\n";
  for (Regime r : config.regimes) {
    text << "# " << to_string(r) << ": train data seed " << config.data_seed(r, false) << ", val data seed "
         << config.data_seed(r, true) << ", model seed " << config.model_seed(r) << "\n";
  }
  text << "# evaluation seeds:";
  for (auto s : config.eval_seeds()) text << ' ' << s;
  text << "\n" << config.to_toml();
  log << text.str() << std::flush;
  write_text(config.log_dir() / (command + "-config.toml"), text.str());
}

void cmd_simulate(const ExperimentConfig& config, std::ostream& log) {
  for (Regime r : config.regimes) {
    const auto settings = config.settings(r);
    for (bool validation : {false, true}) {
      const auto ds = ssm::generate_dataset(validation ? config.val_sequences : config.train_sequences,
                                            validation ? config.val_length : config.train_length, settings,
                                            config.data_seed(r, validation), config.lorenz);
      const fs::path path = config.dataset_path(r, validation);
      fs::create_directories(path.parent_path());
      ssm::save_dataset(ds, path);
      log << "wrote " << path.string() << " (" << ds.sequences.size() << " sequences)\n";
    }
  }
}

void cmd_train(const ExperimentConfig& config, bool resume, std::ostream& log) {
  std::vector<fs::path> needed;
  for (Regime r : config.regimes) {
    needed.push_back(config.dataset_path(r, false));
    needed.push_back(config.dataset_path(r, true));
  }
  require_all(needed);
  const auto prior = build_prior(config);
  for (Regime r : config.regimes) {
    const auto train_set = load_artifact(config.dataset_path(r, false), ssm::load_dataset);
    const auto val_set = load_artifact(config.dataset_path(r, true), ssm::load_dataset);
    train_model(Model::kDpf, r, config, train_set, val_set, prior, resume, log);
    train_model(Model::kSupervised, r, config, train_set, val_set, prior, resume, log);
  }
}

void cmd_evaluate(const ExperimentConfig& config, std::ostream& log) {
  auto uses = [&](const std::string& m) {
    return std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end();
  };
  std::vector<fs::path> needed;
  for (Regime r : config.regimes) {
    needed.push_back(config.dataset_path(r, true));
    if (uses("dpf")) needed.push_back(config.checkpoint_path(r, "dpf"));
    if (uses("supervised")) needed.push_back(config.checkpoint_path(r, "supervised"));
  }
  require_all(needed);
  const auto prior = build_prior(config);
  for (Regime r : config.regimes) {
    const auto val_set = load_artifact(config.dataset_path(r, true), ssm::load_dataset);
    eval::TrainedModels models;
    if (uses("dpf")) models.dpf = load_artifact(config.checkpoint_path(r, "dpf"), models::load_checkpoint);
    if (uses("supervised")) {
      models.supervised = load_artifact(config.checkpoint_path(r, "supervised"), models::load_checkpoint);
    }
    const auto start = std::chrono::steady_clock::now();
    auto report = eval::run_evaluation(val_set, models, prior, config.eval_config(r));
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const fs::path dir = config.eval_dir(r);
    fs::create_directories(dir);
    report.write_results_csv(dir / "results.csv");
    report.write_aggregates_csv(dir / "aggregates.csv");
    write_text(dir / "summary.json", report.summary().dump(2) + "\n");
    log << "wrote " << dir.string() << " (" << report.results.size() << " results, " << seconds << "s)\n";
    for (const auto& a : report.aggregates) {
      char line[200];
      std::snprintf(line, sizeof line, "  %-10s %6.3f  error %.4f +- %.4f  elbo %.2f\n", a.method.c_str(),
                    a.condition, a.tracking_error.mean, a.tracking_error.half_width, a.elbo.mean);
      log << line;
    }
  }
}

void cmd_plot(const ExperimentConfig& config, std::ostream& log) {
  std::optional<eval::EvalReport> noise, partial;
  std::vector<fs::path> needed;
  for (Regime r : config.regimes) needed.push_back(config.eval_dir(r) / "results.csv");
  require_all(needed);
  for (Regime r : config.regimes) {
    const fs::path path = config.eval_dir(r) / "results.csv";
    const auto mode = eval::to_string(r == Regime::kNoise ? eval::Sweep::kNoise : eval::Sweep::kPartial);
    auto report = load_artifact(path, [&](const fs::path& p) { return eval::EvalReport::from_results_csv(p, mode); });
    (r == Regime::kNoise ? noise : partial) = std::move(report);
  }
  const auto files = write_plots(noise ? &*noise : nullptr, partial ? &*partial : nullptr, config.plot_dir());
  for (const auto& f : files.written) log << "wrote " << f.string() << "\n";
}

int run_cli(int argc, const char* const* argv, std::ostream& log) {
  CLI::App app{"Deep variational SMC experiments on Lorenz-attractor image sequences", "dvsmc"};
  app.require_subcommand(1);
  Overrides o;
  std::string config_path, out, methods, regime;
  std::uint64_t seed = 0;
  bool resume = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "TOML config file");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--methods", methods, "comma-separated methods (dpf,bpf,bpf10x,ekf,supervised)");
    sub->add_option("--regime", regime, "noise, partial or both");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "generate training and validation datasets");
  CLI::App* train = app.add_subcommand("train", "train the DPF and the supervised encoder");
  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate all methods on the validation set");
  CLI::App* plot = app.add_subcommand("plot", "write SVG and CSV plots from evaluation results");
  for (auto* sub : {simulate, train, evaluate, plot}) add_common(sub);
  train->add_flag("--resume", resume, "continue from existing checkpoints");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    log << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  auto given = [&](const char* flag) { return sub->count(flag) > 0; };
  try {
    if (given("--config")) o.config = config_path;
    if (given("--seed")) o.seed = seed;
    if (given("--out")) o.out = out;
    if (given("--methods")) o.methods = split_list(methods);
    if (given("--regime")) o.regime = regime;
    const ExperimentConfig config = resolve_config(o);
    const std::string name = sub->get_name();
    log_config(config, name, log);
    if (sub == simulate) cmd_simulate(config, log);
    if (sub == train) cmd_train(config, resume, log);
    if (sub == evaluate) cmd_evaluate(config, log);
    if (sub == plot) cmd_plot(config, log);
    return 0;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  } catch (const MissingArtifact& e) {
    log << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalFailure& e) {
    log << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::domain_error& e) {
    log << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace dvsmc::cli
