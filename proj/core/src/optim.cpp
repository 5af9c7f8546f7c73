// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "posereg/errors.hpp"

namespace posereg {

void OptimConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("optim: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("optim: Adam betas must lie in [0,1)");
  }
  if (!(eps > 0.0)) throw ConfigError("optim: eps must be positive");
  if (lambda < 0.0 || gamma < 0.0) throw ConfigError("optim: lambda/gamma must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("optim: dropout must be in [0,1)");
  if (batch_size == 0) throw ConfigError("optim: batch_size must be positive");
  if (!(beta_loss > 0.0)) throw ConfigError("optim: beta_loss must be positive");
}

AdamState AdamState::init(const ParamSet& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.value.shape(), 0.0);
    s.v.emplace_back(p.value.shape(), 0.0);
  }
  return s;
}

void adam_step(ParamSet& params, std::span<const Tensor> grads, AdamState& state,
               const OptimConfig& cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) +
                         " parameters, " + std::to_string(grads.size()) +
                         " gradients, " + std::to_string(state.m.size()) + " moments");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i].value, grads[i], "adam_step");
    require_same_shape(params[i].value, state.m[i], "adam_step");
    if (!grads[i].all_finite()) {
      throw NumericError("adam_step: non-finite gradient for '" + params[i].name + "'");
    }
  }

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].value.data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      theta[k] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

std::vector<std::vector<std::size_t>> shuffle_batches(std::size_t n,
                                                      std::size_t batch_size, Rng& rng) {
  if (n == 0) throw UsageError("shuffle_batches: no samples");
  if (batch_size == 0) throw UsageError("shuffle_batches: batch size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

BatchStream::BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), rng_(seed) {
  if (n == 0) throw UsageError("BatchStream: no samples");
}

const std::vector<std::size_t>& BatchStream::next() {
  if (cursor_ == batches_.size()) {
    if (!batches_.empty()) ++epoch_;
    batches_ = shuffle_batches(n_, batch_size_, rng_);
    cursor_ = 0;
  }
  return batches_[cursor_++];
}

}  // namespace posereg
