// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/tape.hpp"

#include "posereg/errors.hpp"

namespace posereg {

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn fn) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(fn));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.is_op = true;
  for (const Var& in : inputs) {
    if (&in.tape() != this) {
      throw UsageError("op input recorded on a different tape");
    }
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

Tensor Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.grad) return *n.grad;
  return Tensor(n.value.shape(), 0.0);
}

Tensor& Tape::accumulate(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.grad) n.grad.emplace(n.value.shape(), 0.0);
  return *n.grad;
}

void Tape::backward(Var output) {
  if (backward_done_) throw UsageError("backward() already ran on this tape");
  if (output.value().numel() != 1) {
    throw DimensionError("backward() needs a scalar output, got " +
                         to_string(output.shape()));
  }
  backward_done_ = true;
  visit_order_.clear();
  if (!requires_grad(output.id())) return;
  accumulate(output.id()).fill(1.0);
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.is_op || !n.requires_grad || !n.grad) continue;
    visit_order_.push_back(id);
    n.backward(*this, *n.grad);
    // Intermediate gradients are not needed once propagated.
    n.grad.reset();
  }
}

}  // namespace posereg
