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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dvsmc/autodiff/tensor.hpp"

namespace dvsmc::ad {

// Gradients aligned with ParameterSet::values().
using Gradients = std::vector<std::vector<double>>;

// Named trainable tensors in insertion order.
class ParameterSet {
 public:
  void add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  std::size_t index(std::string_view name) const;

  std::size_t size() const { return values_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Tensor>& values() const { return values_; }
  void set(std::size_t i, Tensor value);

  // Copy whose tensors are leaves on `tape`.
  ParameterSet bind(Tape& tape) const;
  // Gradients of a set returned by bind() after tape.backward().
  Gradients gradients(const Tape& tape) const;

  Gradients zero_gradients() const;
  std::size_t scalar_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::map<std::string, std::size_t, std::less<>> lookup_;
};

void accumulate(Gradients& into, const Gradients& g, double scale = 1.0);
double global_norm(const Gradients& g);

}  // namespace dvsmc::ad
