// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/params.hpp"

#include "posereg/errors.hpp"

namespace posereg {

std::size_t ParamSet::add(std::string name, Tensor value, bool is_bias) {
  if (find(name)) throw UsageError("duplicate parameter name '" + name + "'");
  params_.push_back({std::move(name), std::move(value), is_bias});
  return params_.size() - 1;
}

std::size_t ParamSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw UsageError("unknown parameter '" + std::string(name) + "'");
}

const Parameter* ParamSet::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::size_t ParamSet::scalar_count() const { return scalar_count(""); }

std::size_t ParamSet::scalar_count(std::string_view prefix) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (std::string_view(p.name).starts_with(prefix)) n += p.value.numel();
  }
  return n;
}

std::vector<Var> ParamSet::bind(Tape& tape) const {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (const auto& p : params_) vars.push_back(tape.variable(p.value));
  return vars;
}

std::vector<Tensor> ParamSet::gradients(const Tape& tape,
                                        const std::vector<Var>& bound) {
  std::vector<Tensor> grads;
  grads.reserve(bound.size());
  for (const Var& v : bound) grads.push_back(tape.grad(v));
  return grads;
}

}  // namespace posereg
