// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <optional>
#include <vector>

#include "posereg/tensor.hpp"

namespace posereg {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode gradient tape.
///
/// Every node is either a leaf (constant or trainable variable) or an op with
/// a backward closure. Nodes live in a deque so references returned by
/// value() stay valid while new nodes are recorded. A tape belongs to one
/// training step on one thread.
class Tape {
 public:
  /// Propagates `grad_out` (shape of the node's value) into the inputs'
  /// gradient buffers via Tape::accumulate.
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);

  /// Records an op node. The closure is dropped when no input needs a
  /// gradient, so constant subgraphs cost nothing in backward().
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient of the last backward() output wrt node `id`; zeros when the node
  /// received no gradient.
  Tensor grad(std::size_t id) const;
  Tensor grad(Var v) const { return grad(v.id()); }

  /// Gradient buffer for `id`, allocated (zeroed) on first use. Only for nodes
  /// that require a gradient.
  Tensor& accumulate(std::size_t id);

  /// Reverse sweep from a scalar output. May be called once per tape.
  void backward(Var output);

  /// Op node ids in the order backward() visited them.
  const std::vector<std::size_t>& last_backward_order() const {
    return visit_order_;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    bool is_op = false;
    BackwardFn backward;
    std::optional<Tensor> grad;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  std::vector<std::size_t> visit_order_;
  bool backward_done_ = false;
};

}  // namespace posereg
