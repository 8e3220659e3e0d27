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

#include "dvsmc/autodiff/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace dvsmc::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor() : data_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)) {
  if (numel(shape_) != data.size()) {
    throw ShapeError("tensor shape " + to_string(shape_) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  auto n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::vector(std::vector<double> values) {
  Shape s{values.size()};
  return Tensor(std::move(s), std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     to_string(shape_));
  }
  return shape_[axis];
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape_));
  return (*data_)[0];
}

Tensor Tensor::detach() const {
  Tensor t = *this;
  t.tape_ = nullptr;
  t.node_ = -1;
  return t;
}

Tensor Tape::watch(const Tensor& leaf) {
  return record(leaf.detach(), nullptr);
}

Tensor Tape::record(Tensor output, Backward backward) {
  Node node;
  node.numel = output.size();
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  output.tape_ = this;
  output.node_ = static_cast<int>(nodes_.size()) - 1;
  return output;
}

void Tape::backward(const Tensor& root) {
  if (root.size() != 1) {
    throw ShapeError("backward() needs a scalar root, got shape " + to_string(root.shape()));
  }
  const double one = 1.0;
  backward(root, std::span<const double>(&one, 1));
}

void Tape::backward(const Tensor& root, std::span<const double> seed) {
  if (root.tape() != this || root.node() < 0) {
    throw std::invalid_argument("backward() root is not recorded on this tape");
  }
  if (seed.size() != root.size()) throw ShapeError("backward() seed size mismatch");
  zero_grad();
  accumulate(root.node(), seed);
  for (int i = root.node(); i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    if (!node.backward || node.grad.empty()) continue;
    // Inputs precede outputs, so every buffer written here is visited later.
    node.backward(std::span<const double>(node.grad), *this);
  }
}

std::vector<double> Tape::grad(const Tensor& t) const {
  if (t.tape() != this || t.node() < 0) return std::vector<double>(t.size(), 0.0);
  const Node& node = nodes_[static_cast<std::size_t>(t.node())];
  if (node.grad.empty()) return std::vector<double>(node.numel, 0.0);
  return node.grad;
}

std::span<double> Tape::grad_buffer(int node) {
  Node& n = nodes_.at(static_cast<std::size_t>(node));
  if (n.grad.empty()) n.grad.assign(n.numel, 0.0);
  return n.grad;
}

void Tape::accumulate(int node, std::span<const double> g) {
  if (node < 0) return;
  auto buf = grad_buffer(node);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
}

void Tape::zero_grad() {
  for (auto& n : nodes_) n.grad.clear();
}

Tape* common_tape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = nullptr;
  for (const Tensor* t : inputs) {
    if (!t->attached()) continue;
    if (tape && tape != t->tape()) throw std::invalid_argument("inputs recorded on different tapes");
    tape = t->tape();
  }
  return tape;
}

Tape* common_tape(std::span<const Tensor> inputs) {
  Tape* tape = nullptr;
  for (const Tensor& t : inputs) {
    if (!t.attached()) continue;
    if (tape && tape != t.tape()) throw std::invalid_argument("inputs recorded on different tapes");
    tape = t.tape();
  }
  return tape;
}

}  // namespace dvsmc::ad
