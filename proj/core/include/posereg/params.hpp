// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "posereg/tape.hpp"
#include "posereg/tensor.hpp"

namespace posereg {

struct Parameter {
  std::string name;
  Tensor value;
  /// Biases are excluded from L2 regularization.
  bool is_bias = false;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Ordered, named collection of every learnable tensor of a model.
class ParamSet {
 public:
  std::size_t add(std::string name, Tensor value, bool is_bias);

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  /// Throws UsageError for unknown names.
  std::size_t index_of(std::string_view name) const;
  const Parameter* find(std::string_view name) const;

  /// Number of scalar parameters.
  std::size_t scalar_count() const;
  /// Scalar count over parameters whose name starts with `prefix`.
  std::size_t scalar_count(std::string_view prefix) const;

  /// Registers every parameter as a trainable leaf, in order.
  std::vector<Var> bind(Tape& tape) const;
  /// Gradients of the bound leaves after tape.backward().
  static std::vector<Tensor> gradients(const Tape& tape, const std::vector<Var>& bound);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<Parameter> params_;
};

}  // namespace posereg
