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


#include "dvsmc/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dvsmc/io/archive.hpp"

namespace dvsmc::eval {

std::vector<double> tracking_errors(const std::vector<ssm::StateVector>& estimates,
                                    const std::vector<ssm::StateVector>& truth) {
  if (estimates.size() != truth.size()) {
    throw std::invalid_argument("tracking_errors: " + std::to_string(estimates.size()) + " estimates for " +
                                std::to_string(truth.size()) + " true states");
  }
  std::vector<double> d(truth.size());
  for (std::size_t t = 0; t < truth.size(); ++t) {
    double sq = 0.0;
    for (std::size_t j = 0; j < ssm::kStateDim; ++j) sq += (estimates[t][j] - truth[t][j]) * (estimates[t][j] - truth[t][j]);
    d[t] = std::sqrt(sq);
  }
  return d;
}

std::vector<double> tracking_errors(const smc::FilterTrace& trace, const std::vector<ssm::StateVector>& truth) {
  if (trace.dim < ssm::kStateDim) throw std::invalid_argument("tracking_errors: trace has fewer than 3 coordinates");
  if (trace.length() != truth.size()) {
    throw std::invalid_argument("tracking_errors: trace length " + std::to_string(trace.length()) +
                                " does not match " + std::to_string(truth.size()) + " true states");
  }
  std::vector<ssm::StateVector> est(truth.size());
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const auto m = trace.posterior_mean(t);
    est[t] = {m[0], m[1], m[2]};
  }
  return tracking_errors(est, truth);
}

dist::Gaussian fit_position(const smc::FilterTrace& trace, std::size_t t, double jitter) {
  const std::size_t n = trace.particles, d = trace.dim;
  std::vector<double> pos(n * ssm::kStateDim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < ssm::kStateDim; ++j) pos[i * ssm::kStateDim + j] = trace.states.at(t)[i * d + j];
  }
  try {
    return dist::fit_gaussian(pos, ssm::kStateDim, trace.weights.at(t), jitter);
  } catch (const std::domain_error& e) {
    throw std::domain_error("degenerate particle cloud at step " + std::to_string(t) + ": " + e.what());
  }
}

LogDensity prior_density(const AttractorPrior& prior) {
  return [&prior](const ssm::StateVector& z) { return prior.log_pdf(z); };
}

ElboTerms elbo_terms(const std::vector<dist::Gaussian>& posteriors, const std::vector<ssm::ObservationFrame>& frames,
                     double sigma_v, const LogDensity& prior, const ElboConfig& config, Rng& rng) {
  if (posteriors.size() != frames.size() || frames.empty()) {
    throw std::invalid_argument("elbo_terms: need one posterior per frame");
  }
  if (config.mc_samples < 2) throw std::invalid_argument("elbo_terms: need at least two Monte Carlo samples");
  const std::size_t s = config.mc_samples, steps = frames.size();
  ElboTerms out;
  double se_sq = 0.0;
  std::vector<double> z(s * ssm::kStateDim), gap(s);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& q = posteriors[t];
    if (q.dim() != ssm::kStateDim) throw std::invalid_argument("elbo_terms: posteriors must be 3-D");
    for (std::size_t k = 0; k < s; ++k) {
      const Eigen::VectorXd x = q.sample(rng);
      const std::span<double> row(z.data() + k * ssm::kStateDim, ssm::kStateDim);
      for (std::size_t j = 0; j < ssm::kStateDim; ++j) row[j] = x(static_cast<Eigen::Index>(j));
      gap[k] = q.log_pdf(row) - prior({row[0], row[1], row[2]});
    }
    const ad::Tensor ll = ssm::log_likelihood(ad::Tensor({s, ssm::kStateDim}, z), frames[t], sigma_v);
    double ll_mean = 0.0;
    for (double v : ll.data()) ll_mean += v;
    ll_mean /= static_cast<double>(s);
    double kl_mean = 0.0;
    for (double v : gap) kl_mean += v;
    kl_mean /= static_cast<double>(s);
    double var = 0.0;
    for (double v : gap) var += (v - kl_mean) * (v - kl_mean);
    var /= static_cast<double>(s - 1);
    const double se = std::sqrt(var / static_cast<double>(s));
    if (kl_mean < -3.0 * se) ++out.flagged_steps;
    out.likelihood += ll_mean;
    out.kl += kl_mean;
    se_sq += se * se;
  }
  out.likelihood /= static_cast<double>(steps);
  out.kl /= static_cast<double>(steps);
  out.kl_standard_error = std::sqrt(se_sq) / static_cast<double>(steps);
  return out;
}

ElboTerms elbo_decompose(const smc::FilterTrace& trace, const std::vector<ssm::ObservationFrame>& frames,
                         double sigma_v, const LogDensity& prior, const ElboConfig& config, Rng& rng) {
  if (trace.length() != frames.size()) throw std::invalid_argument("elbo_decompose: trace and frames differ in length");
  std::vector<dist::Gaussian> q;
  q.reserve(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) q.push_back(fit_position(trace, t, config.jitter));
  return elbo_terms(q, frames, sigma_v, prior, config, rng);
}

Interval confidence_interval(const std::vector<double>& values) {
  if (values.size() < 2) throw std::invalid_argument("confidence_interval: need at least two seeds");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n - 1.0;
  return {mean, 1.96 * std::sqrt(var) / std::sqrt(n), values.size()};
}

void EvalReport::aggregate() {
  aggregates.clear();
  std::vector<std::pair<std::string, double>> keys;
  std::map<std::pair<std::string, double>, std::vector<const SeedResult*>> groups;
  for (const auto& r : results) {
    auto key = std::make_pair(r.method, r.condition);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r);
  }
  for (const auto& key : keys) {
    std::vector<double> err, ll, kl, elbo;
    for (const auto* r : groups[key]) {
      err.push_back(r->tracking_error);
      ll.push_back(r->likelihood);
      kl.push_back(r->kl);
      elbo.push_back(r->elbo);
    }
    aggregates.push_back({key.first, key.second, confidence_interval(err), confidence_interval(ll),
                          confidence_interval(kl), confidence_interval(elbo)});
  }
}

const Aggregate& EvalReport::find(const std::string& method, double condition) const {
  for (const auto& a : aggregates) {
    if (a.method == method && std::abs(a.condition - condition) < 1e-9) return a;
  }
  throw std::out_of_range("no aggregate for " + method + " at " + std::to_string(condition));
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void EvalReport::write_results_csv(const std::filesystem::path& path) const {
  auto out = open_out(path);
  out << "method,condition,seed,tracking_error,likelihood,kl,elbo,flagged_steps\n";
  for (const auto& r : results) {
    out << r.method << ',' << num(r.condition) << ',' << r.seed << ',' << num(r.tracking_error) << ','
        << num(r.likelihood) << ',' << num(r.kl) << ',' << num(r.elbo) << ',' << r.flagged_steps << '\n';
  }
}

void EvalReport::write_aggregates_csv(const std::filesystem::path& path) const {
  auto out = open_out(path);
  out << "method,condition,metric,mean,ci_low,ci_high,n\n";
  for (const auto& a : aggregates) {
    const std::pair<const char*, const Interval*> metrics[] = {
        {"tracking_error", &a.tracking_error}, {"likelihood", &a.likelihood}, {"kl", &a.kl}, {"elbo", &a.elbo}};
    for (const auto& [name, iv] : metrics) {
      out << a.method << ',' << num(a.condition) << ',' << name << ',' << num(iv->mean) << ',' << num(iv->low())
          << ',' << num(iv->high()) << ',' << iv->count << '\n';
    }
  }
}

nlohmann::json EvalReport::summary() const {
  nlohmann::json j;
  j["mode"] = mode;
  j["seeds"] = seeds;
  auto& rows = j["aggregates"] = nlohmann::json::array();
  for (const auto& a : aggregates) {
    auto iv = [](const Interval& i) {
      return nlohmann::json{{"mean", i.mean}, {"ci_low", i.low()}, {"ci_high", i.high()}, {"n", i.count}};
    };
    rows.push_back({{"method", a.method},
                    {"condition", a.condition},
                    {"tracking_error", iv(a.tracking_error)},
                    {"likelihood", iv(a.likelihood)},
                    {"kl", iv(a.kl)},
                    {"elbo", iv(a.elbo)}});
  }
  return j;
}

EvalReport EvalReport::from_results_csv(const std::filesystem::path& path, const std::string& mode) {
  std::ifstream in(path);
  if (!in) throw io::FormatError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "method,condition,seed,tracking_error,likelihood,kl,elbo,flagged_steps") {
    throw io::FormatError(path.string() + ": unexpected header");
  }
  EvalReport report;
  report.mode = mode;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw io::FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 8 fields");
    try {
      SeedResult r;
      r.method = f[0];
      r.condition = std::stod(f[1]);
      r.seed = std::stoull(f[2]);
      r.tracking_error = std::stod(f[3]);
      r.likelihood = std::stod(f[4]);
      r.kl = std::stod(f[5]);
      r.elbo = std::stod(f[6]);
      r.flagged_steps = std::stoull(f[7]);
      if (std::find(report.seeds.begin(), report.seeds.end(), r.seed) == report.seeds.end()) report.seeds.push_back(r.seed);
      report.results.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw io::FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  report.aggregate();
  return report;
}

}  // namespace dvsmc::eval
