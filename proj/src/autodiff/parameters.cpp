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

#include "dvsmc/autodiff/parameters.hpp"

#include <cmath>
#include <stdexcept>

namespace dvsmc::ad {

void ParameterSet::add(std::string name, Tensor value) {
  if (lookup_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  lookup_.emplace(name, values_.size());
  names_.push_back(std::move(name));
  values_.push_back(value.detach());
}

bool ParameterSet::contains(std::string_view name) const { return lookup_.find(name) != lookup_.end(); }

std::size_t ParameterSet::index(std::string_view name) const {
  auto it = lookup_.find(name);
  if (it == lookup_.end()) throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

const Tensor& ParameterSet::at(std::string_view name) const { return values_[index(name)]; }

void ParameterSet::set(std::size_t i, Tensor value) {
  if (value.shape() != values_.at(i).shape()) {
    throw ShapeError("parameter '" + names_[i] + "' expects shape " + to_string(values_[i].shape()) +
                     ", got " + to_string(value.shape()));
  }
  values_[i] = value.detach();
}

ParameterSet ParameterSet::bind(Tape& tape) const {
  ParameterSet out = *this;
  for (auto& v : out.values_) v = tape.watch(v);
  return out;
}

Gradients ParameterSet::gradients(const Tape& tape) const {
  Gradients g;
  g.reserve(values_.size());
  for (const auto& v : values_) g.push_back(tape.grad(v));
  return g;
}

Gradients ParameterSet::zero_gradients() const {
  Gradients g;
  g.reserve(values_.size());
  for (const auto& v : values_) g.emplace_back(v.size(), 0.0);
  return g;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

void accumulate(Gradients& into, const Gradients& g, double scale) {
  if (into.size() != g.size()) throw std::invalid_argument("gradient sets differ in length");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (into[i].size() != g[i].size()) throw std::invalid_argument("gradient sizes differ");
    for (std::size_t j = 0; j < g[i].size(); ++j) into[i][j] += scale * g[i][j];
  }
}

double global_norm(const Gradients& g) {
  double s = 0.0;
  for (const auto& v : g) {
    for (double x : v) s += x * x;
  }
  return std::sqrt(s);
}

}  // namespace dvsmc::ad
