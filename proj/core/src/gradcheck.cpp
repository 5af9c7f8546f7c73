// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "posereg/errors.hpp"
#include "posereg/random.hpp"

namespace posereg {

namespace {

double checked(double v) {
  if (!std::isfinite(v)) throw NumericError("gradient check: objective is not finite");
  return v;
}

}  // namespace

GradCheckResult finite_diff_check(const GradObjective& f, ParamSet params,
                                  const GradCheckOptions& options) {
  if (!(options.eps >= 1e-7 && options.eps <= 1e-3)) {
    throw UsageError("gradient check: eps must lie in [1e-7, 1e-3]");
  }
  std::vector<Tensor> analytic;
  checked(f(params, &analytic));
  if (analytic.size() != params.size()) {
    throw DimensionError("gradient check: objective returned " +
                         std::to_string(analytic.size()) + " gradients for " +
                         std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(analytic[i], params[i].value, "gradient check");
  }

  // (parameter, flat index) pairs, deduplicated and ordered.
  std::set<std::pair<std::size_t, std::size_t>> coords;
  Rng rng(options.seed);
  const std::size_t total = params.scalar_count();
  std::vector<std::size_t> global(std::min(total, options.min_coords));
  {
    std::vector<std::size_t> all(total);
    for (std::size_t i = 0; i < total; ++i) all[i] = i;
    std::sample(all.begin(), all.end(), global.begin(), global.size(), rng);
  }
  for (std::size_t flat : global) {
    std::size_t p = 0;
    while (flat >= params[p].value.numel()) flat -= params[p++].value.numel();
    coords.emplace(p, flat);
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    const std::size_t n = params[p].value.numel();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::vector<std::size_t> pick(std::min(n, options.per_param));
    std::sample(idx.begin(), idx.end(), pick.begin(), pick.size(), rng);
    for (std::size_t i : pick) coords.emplace(p, i);
  }

  GradCheckResult result;
  std::vector<double> worst(params.size(), -1.0);
  for (const auto& [p, i] : coords) {
    double& theta = params[p].value[i];
    const double saved = theta;
    theta = saved + options.eps;
    const double up = checked(f(params, nullptr));
    theta = saved - options.eps;
    const double down = checked(f(params, nullptr));
    theta = saved;
    const double numeric = (up - down) / (2.0 * options.eps);
    const double a = analytic[p][i];
    const double err =
        std::abs(a - numeric) / std::max({options.denom_floor, std::abs(a), std::abs(numeric)});
    worst[p] = std::max(worst[p], err);
    result.max_rel_err = std::max(result.max_rel_err, err);
    ++result.coords_checked;
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (worst[p] >= 0.0) result.per_param.emplace_back(params[p].name, worst[p]);
  }
  return result;
}

}  // namespace posereg
