// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <vector>

#include "posereg/params.hpp"
#include "posereg/tape.hpp"

namespace posereg {

using Vec3 = std::array<double, 3>;
/// Quaternion stored (w, x, y, z).
using Quat = std::array<double, 4>;

/// Camera pose: position in meters, orientation as a unit quaternion.
struct Pose {
  Vec3 p{0.0, 0.0, 0.0};
  Quat q{1.0, 0.0, 0.0, 0.0};

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Position error in meters and orientation error in degrees.
struct ErrorPair {
  double pos_err = 0.0;
  double ori_err = 0.0;
};

struct MedianErrors {
  double pos = 0.0;
  double ori = 0.0;
};

/// q / |q|. Throws NumericError when |q| <= 1e-12.
Quat quat_normalize(const Quat& q);

/// Picks the sign of q with w >= 0; when w == 0 the first nonzero component
/// is made non-negative.
Quat quat_canonicalize(const Quat& q);

/// Normalized and sign-canonical; the form ground truth is stored in. Inputs
/// already unit within 1e-12 are only sign-canonicalized, which keeps the
/// operation idempotent bit-for-bit.
Quat quat_standardize(const Quat& q);

/// Row-major 3x3 rotation matrix of a unit quaternion.
std::array<double, 9> quat_to_matrix(const Quat& q);

/// Geodesic rotation distance 2·acos(min(1, |<q1,q2>|)) in degrees. Both
/// inputs must be unit within 1e-6 (UsageError otherwise).
double angular_error_deg(const Quat& q1, const Quat& q2);

double position_error(const Vec3& a, const Vec3& b);

/// Error of a raw network prediction against ground truth; the predicted
/// quaternion is normalized first.
ErrorPair pose_error(const Pose& truth, const Vec3& p_hat, const Quat& q_raw);

/// Median of a non-empty list; even counts average the two middle values.
double median(std::vector<double> values);

/// Component-wise medians. Throws UsageError on an empty list.
MedianErrors median_errors(std::span<const ErrorPair> pairs);

/// Weighted pose loss  |p − p̂|₂ + β·|q − q̂/|q̂||₂.
double pose_loss(const Pose& truth, const Vec3& p_hat, const Quat& q_raw, double beta);

/// Batched tape version: p_hat [B x 3], q_raw [B x 4] -> per-sample losses [B].
Var pose_loss(Var p_hat, Var q_raw, std::span<const Pose> truth, double beta);

/// mean(batch) + γ·mean(aux) + λ·Σ|W|² over non-bias parameters.
double total_objective(std::span<const double> batch_losses, const ParamSet& params,
                       double lambda, double gamma,
                       std::span<const double> aux_losses = {});

/// Tape version; `bound` are the parameter leaves in ParamSet order.
Var total_objective(Var batch_losses, std::span<const Var> aux_losses,
                    const ParamSet& params, const std::vector<Var>& bound,
                    double lambda, double gamma);

/// Unrounded percent reduction 100·(baseline − proposed)/baseline.
double improvement_percent_exact(double baseline, double proposed);

/// Rounded percent reduction from a baseline error to a proposed error,
/// e.g. 1.92 -> 0.99 gives 48.
/// Rounds to the nearest integer, halves away from zero.
int improvement_percent(double baseline, double proposed);

}  // namespace posereg
