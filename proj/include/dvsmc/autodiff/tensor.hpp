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
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dvsmc::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tape;

// Immutable dense float64 array. A tensor may be attached to a Tape, in which
// case operations on it are recorded and gradients flow back to it.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor vector(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_->size(); }

  std::span<const double> data() const { return *data_; }
  double operator[](std::size_t i) const { return (*data_)[i]; }
  double item() const;

  bool attached() const { return tape_ != nullptr && node_ >= 0; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  // Same values, no tape.
  Tensor detach() const;

 private:
  friend class Tape;

  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Records operations for one reverse sweep. Tensors hold a raw pointer to
// their tape, so a Tape must outlive every tensor recorded on it.
class Tape {
 public:
  // Receives the gradient of the node's output and accumulates into inputs.
  using Backward = std::function<void(std::span<const double> grad_out, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a leaf. Gradients are readable through grad() after backward().
  Tensor watch(const Tensor& leaf);

  Tensor record(Tensor output, Backward backward);

  void backward(const Tensor& root);
  // Vector-Jacobian product with an explicit output seed; used for Jacobians.
  void backward(const Tensor& root, std::span<const double> seed);

  std::vector<double> grad(const Tensor& t) const;

  // Mutable gradient buffer of a node; allocated on first use.
  std::span<double> grad_buffer(int node);
  void accumulate(int node, std::span<const double> g);

  void zero_grad();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::size_t numel = 0;
    Backward backward;
    std::vector<double> grad;
  };

  std::vector<Node> nodes_;
};

// Returns the tape shared by the attached inputs, or nullptr if none is
// attached. Throws if inputs are attached to different tapes.
Tape* common_tape(std::initializer_list<const Tensor*> inputs);
Tape* common_tape(std::span<const Tensor> inputs);

}  // namespace dvsmc::ad
