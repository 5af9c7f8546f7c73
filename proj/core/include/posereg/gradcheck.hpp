// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "posereg/params.hpp"

namespace posereg {

/// Scalar objective of a parameter set. When `grads` is non-null the callee
/// also fills it with analytic gradients, one tensor per parameter.
using GradObjective =
    std::function<double(const ParamSet& params, std::vector<Tensor>* grads)>;

struct GradCheckOptions {
  double eps = 1e-5;
  /// Coordinates drawn uniformly across all parameters.
  std::size_t min_coords = 200;
  /// Extra coordinates guaranteed per parameter tensor.
  std::size_t per_param = 8;
  std::uint64_t seed = 0;
  /// Smallest denominator of the relative error; gradients below it are
  /// compared in absolute terms.
  double denom_floor = 1.0;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  /// Worst relative error per parameter name (only checked parameters).
  std::vector<std::pair<std::string, double>> per_param;
};

/// Compares analytic gradients against central differences
/// (f(θ+ε) − f(θ−ε)) / 2ε on a random subsample of coordinates. Relative
/// error is |a − n| / max(floor, |a|, |n|).
GradCheckResult finite_diff_check(const GradObjective& f, ParamSet params,
                                  const GradCheckOptions& options = {});

}  // namespace posereg
