// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "posereg/params.hpp"
#include "posereg/random.hpp"

namespace posereg {

/// Optimizer and objective hyperparameters. Defaults follow the published
/// training setup except the learning rate, which it does not state.
struct OptimConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1.0;
  /// L2 weight on non-bias parameters (2^-4).
  double lambda = 0.0625;
  /// Weight of auxiliary pose losses.
  double gamma = 0.3;
  double dropout = 0.5;
  std::size_t batch_size = 75;
  /// Orientation weight β of the pose loss; scene dependent.
  double beta_loss = 500.0;
  std::uint64_t seed = 0;

  void validate() const;

  friend bool operator==(const OptimConfig&, const OptimConfig&) = default;
};

/// First/second moment estimates mirroring the parameter shapes.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;

  static AdamState init(const ParamSet& params);
};

/// One bias-corrected Adam update:
///   m ← β₁m + (1−β₁)g,  v ← β₂v + (1−β₂)g²,
///   θ ← θ − lr · m̂ / (√v̂ + ε)  with m̂ = m/(1−β₁ᵗ), v̂ = v/(1−β₂ᵗ).
void adam_step(ParamSet& params, std::span<const Tensor> grads, AdamState& state,
               const OptimConfig& cfg);

/// One epoch: a fresh uniform permutation of 0..n-1 cut into consecutive
/// batches; the last batch may be short.
std::vector<std::vector<std::size_t>> shuffle_batches(std::size_t n,
                                                      std::size_t batch_size, Rng& rng);

/// Endless stream of batches, reshuffling at every epoch boundary.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed);

  const std::vector<std::size_t>& next();
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t n_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::vector<std::size_t>> batches_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

}  // namespace posereg
