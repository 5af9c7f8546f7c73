// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/pose_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "posereg/errors.hpp"
#include "posereg/ops.hpp"

namespace posereg {

namespace {

// Predictions scaled down to 1e-12 must still normalize, so the rejection
// bound sits one decade lower.
constexpr double kMinQuatNorm = 1e-13;
constexpr double kUnitTolerance = 1e-6;

double norm4(const Quat& q) {
  return std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
}

// Norm used for normalization. A quaternion that is unit up to rounding keeps
// its exact components, so a prediction equal to a stored unit truth gives
// a loss of exactly zero.
double normalizing_norm(const Quat& q) {
  const double n = norm4(q);
  return std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon() ? 1.0 : n;
}

void require_unit(const Quat& q, const char* what) {
  if (std::abs(norm4(q) - 1.0) > kUnitTolerance) {
    throw UsageError(std::string(what) + ": quaternion is not unit norm");
  }
}

}  // namespace

Quat quat_normalize(const Quat& q) {
  const double n = normalizing_norm(q);
  if (!(n > kMinQuatNorm)) {
    throw NumericError("quaternion norm " + std::to_string(n) + " is degenerate");
  }
  return {q[0] / n, q[1] / n, q[2] / n, q[3] / n};
}

Quat quat_canonicalize(const Quat& q) {
  for (double c : q) {
    if (c > 0.0) return q;
    if (c < 0.0) return {-q[0], -q[1], -q[2], -q[3]};
  }
  return q;
}

Quat quat_standardize(const Quat& q) {
  // Already-unit input is kept bit-exact so stored poses round-trip.
  if (std::abs(norm4(q) - 1.0) <= 1e-12) return quat_canonicalize(q);
  return quat_canonicalize(quat_normalize(q));
}

std::array<double, 9> quat_to_matrix(const Quat& q) {
  const auto [w, x, y, z] = q;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

double angular_error_deg(const Quat& q1, const Quat& q2) {
  require_unit(q1, "angular_error_deg");
  require_unit(q2, "angular_error_deg");
  // 2·acos|⟨q1,q2⟩| written as 4·atan2(|q1 − s·q2|, |q1 + s·q2|), s = sign of
  // the dot product. Same value, but exact at 0° where acos loses digits.
  const double dot = q1[0] * q2[0] + q1[1] * q2[1] + q1[2] * q2[2] + q1[3] * q2[3];
  const double s = dot < 0.0 ? -1.0 : 1.0;
  Quat diff, sum;
  for (int k = 0; k < 4; ++k) {
    diff[k] = q1[k] - s * q2[k];
    sum[k] = q1[k] + s * q2[k];
  }
  return 4.0 * std::atan2(norm4(diff), norm4(sum)) * 180.0 / std::numbers::pi;
}

double position_error(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

ErrorPair pose_error(const Pose& truth, const Vec3& p_hat, const Quat& q_raw) {
  return {position_error(truth.p, p_hat),
          angular_error_deg(truth.q, quat_normalize(q_raw))};
}

double median(std::vector<double> values) {
  if (values.empty()) throw UsageError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

MedianErrors median_errors(std::span<const ErrorPair> pairs) {
  if (pairs.empty()) throw UsageError("median_errors: empty error list");
  std::vector<double> pos;
  std::vector<double> ori;
  pos.reserve(pairs.size());
  ori.reserve(pairs.size());
  for (const auto& e : pairs) {
    pos.push_back(e.pos_err);
    ori.push_back(e.ori_err);
  }
  return {median(std::move(pos)), median(std::move(ori))};
}

double pose_loss(const Pose& truth, const Vec3& p_hat, const Quat& q_raw, double beta) {
  if (!(beta > 0.0)) throw UsageError("pose_loss: beta must be positive");
  const Quat u = quat_normalize(q_raw);
  double qd = 0.0;
  for (int k = 0; k < 4; ++k) qd += (truth.q[k] - u[k]) * (truth.q[k] - u[k]);
  return position_error(truth.p, p_hat) + beta * std::sqrt(qd);
}

Var pose_loss(Var p_hat, Var q_raw, std::span<const Pose> truth, double beta) {
  if (!(beta > 0.0)) throw UsageError("pose_loss: beta must be positive");
  const Tensor& pv = p_hat.value();
  const Tensor& qv = q_raw.value();
  const std::size_t batch = truth.size();
  if (pv.shape() != Shape{batch, 3} || qv.shape() != Shape{batch, 4}) {
    throw DimensionError("pose_loss: predictions " + to_string(pv.shape()) + " / " +
                         to_string(qv.shape()) + " do not match " +
                         std::to_string(batch) + " poses");
  }

  // Per-sample dL/dp̂ and dL/dq̂ are formed in the forward pass.
  Tensor losses({batch});
  Tensor dp({batch, 3});
  Tensor dq({batch, 4});
  for (std::size_t s = 0; s < batch; ++s) {
    const Pose& t = truth[s];
    Vec3 diff;
    for (int k = 0; k < 3; ++k) diff[k] = pv.at(s, k) - t.p[k];
    const double pos = std::sqrt(diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2]);
    // Subgradient 0 at the norm's kink.
    if (pos > 0.0) {
      for (int k = 0; k < 3; ++k) dp.at(s, k) = diff[k] / pos;
    }

    const Quat raw{qv.at(s, 0), qv.at(s, 1), qv.at(s, 2), qv.at(s, 3)};
    const double n = normalizing_norm(raw);
    if (!(n > kMinQuatNorm)) {
      throw NumericError("pose_loss: predicted quaternion norm is degenerate");
    }
    Quat u;
    for (int k = 0; k < 4; ++k) u[k] = raw[k] / n;
    Quat d;
    for (int k = 0; k < 4; ++k) d[k] = u[k] - t.q[k];
    const double dn = norm4(d);
    losses[s] = pos + beta * dn;
    if (dn > 0.0) {
      // dL/du = β d/|d|; du/dq̂ = (I − u uᵀ)/|q̂|
      Quat gu;
      for (int k = 0; k < 4; ++k) gu[k] = beta * d[k] / dn;
      const double proj = gu[0] * u[0] + gu[1] * u[1] + gu[2] * u[2] + gu[3] * u[3];
      for (int k = 0; k < 4; ++k) dq.at(s, k) = (gu[k] - proj * u[k]) / n;
    }
  }

  return p_hat.tape().record(
      std::move(losses), {p_hat, q_raw},
      [p_hat, q_raw, dp = std::move(dp), dq = std::move(dq), batch](Tape& t,
                                                                     const Tensor& g) {
        if (p_hat.requires_grad()) {
          Tensor& gp = t.accumulate(p_hat.id());
          for (std::size_t s = 0; s < batch; ++s) {
            for (int k = 0; k < 3; ++k) gp.at(s, k) += g[s] * dp.at(s, k);
          }
        }
        if (q_raw.requires_grad()) {
          Tensor& gq = t.accumulate(q_raw.id());
          for (std::size_t s = 0; s < batch; ++s) {
            for (int k = 0; k < 4; ++k) gq.at(s, k) += g[s] * dq.at(s, k);
          }
        }
      });
}

double total_objective(std::span<const double> batch_losses, const ParamSet& params,
                       double lambda, double gamma, std::span<const double> aux_losses) {
  if (lambda < 0.0 || gamma < 0.0) {
    throw UsageError("total_objective: lambda and gamma must be non-negative");
  }
  if (batch_losses.empty()) throw UsageError("total_objective: empty batch");
  double mean = 0.0;
  for (double l : batch_losses) mean += l;
  mean /= static_cast<double>(batch_losses.size());
  double aux = 0.0;
  if (!aux_losses.empty()) {
    for (double l : aux_losses) aux += l;
    aux /= static_cast<double>(aux_losses.size());
  }
  double reg = 0.0;
  for (const auto& p : params) {
    if (p.is_bias) continue;
    for (double w : p.value.data()) reg += w * w;
  }
  return mean + gamma * aux + lambda * reg;
}

Var total_objective(Var batch_losses, std::span<const Var> aux_losses,
                    const ParamSet& params, const std::vector<Var>& bound,
                    double lambda, double gamma) {
  if (lambda < 0.0 || gamma < 0.0) {
    throw UsageError("total_objective: lambda and gamma must be non-negative");
  }
  if (bound.size() != params.size()) {
    throw UsageError("total_objective: bound variables do not match parameters");
  }
  Var total = mean(batch_losses);
  if (!aux_losses.empty() && gamma > 0.0) {
    // mean over every auxiliary loss entry
    Var aux = aux_losses.size() == 1 ? mean(aux_losses[0]) : mean(concat(aux_losses));
    total = add(total, scale(aux, gamma));
  }
  if (lambda > 0.0) {
    std::vector<Var> terms;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i].is_bias) terms.push_back(sum_squares(bound[i]));
    }
    if (!terms.empty()) {
      Var reg = terms.size() == 1 ? terms[0] : sum(concat(terms));
      total = add(total, scale(reg, lambda));
    }
  }
  return total;
}

double improvement_percent_exact(double baseline, double proposed) {
  if (!(baseline > 0.0)) throw UsageError("improvement: baseline must be positive");
  return 100.0 * (baseline - proposed) / baseline;
}

int improvement_percent(double baseline, double proposed) {
  return static_cast<int>(std::lround(improvement_percent_exact(baseline, proposed)));
}

}  // namespace posereg
