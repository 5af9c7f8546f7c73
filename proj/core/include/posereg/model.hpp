// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "posereg/lstm.hpp"
#include "posereg/ops.hpp"
#include "posereg/params.hpp"
#include "posereg/pose_math.hpp"

namespace posereg {

enum class HeadKind { lstm, fc };
enum class BackboneKind { features, tiny_cnn };

std::string_view to_string(HeadKind k);
std::string_view to_string(BackboneKind k);
HeadKind parse_head_kind(std::string_view s);
BackboneKind parse_backbone_kind(std::string_view s);

/// Small learnable convolutional stack standing in for a large image backbone:
///   conv3x3(C->c1) relu, conv3x3/2(c1->c2) relu, conv3x3/2(c2->c3) relu,
///   flatten, FC -> F.
/// The optional auxiliary head regresses a pose from the spatially averaged
/// c2 activations.
struct TinyCnnSpec {
  std::size_t input_size = 16;
  std::size_t channels1 = 8;
  std::size_t channels2 = 16;
  std::size_t channels3 = 16;
  bool aux_head = true;

  friend bool operator==(const TinyCnnSpec&, const TinyCnnSpec&) = default;
};

struct ModelSpec {
  HeadKind head = HeadKind::lstm;
  BackboneKind backbone = BackboneKind::features;
  /// Backbone feature width F.
  std::size_t feature_dim = 2048;
  /// LSTM hidden size H.
  std::size_t hidden = 128;
  /// Width of the embedding FC. The LSTM head requires 2048 (the 32x64 grid).
  std::size_t embed_dim = kGridSize;
  double dropout = 0.5;
  std::size_t image_channels = 3;
  /// Fixed multiplier on the position outputs: p_hat = position_scale * FC(.).
  /// Reparametrizes the position layer in units of position_scale meters.
  double position_scale = 1.0;
  TinyCnnSpec cnn;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Raw outputs for a batch: p_hat [B x 3], q_raw [B x 4] (unnormalized).
struct PoseOutputVars {
  Var p_hat;
  Var q_raw;
};

struct ForwardOutput {
  PoseOutputVars main;
  /// Auxiliary pose heads (tiny-cnn backbone only).
  std::vector<PoseOutputVars> aux;
};

struct LstmHeadVars {
  Var embed_w;
  Var embed_b;
  /// Indexed by Direction: up, down, left, right.
  std::array<LstmVars, 4> sweeps;
  Var pos_w;
  Var pos_b;
  Var quat_w;
  Var quat_b;
};

struct FcHeadVars {
  Var embed_w;
  Var embed_b;
  Var pos_w;
  Var pos_b;
  Var quat_w;
  Var quat_b;
};

inline constexpr std::array<Direction, 4> kSweepOrder = {
    Direction::up, Direction::down, Direction::left, Direction::right};

/// Embedding FC -> dropout -> 32x64 fold -> four directional sweeps ->
/// concat [B x 4H] -> separate position and quaternion FCs.
PoseOutputVars lstm_head(Var features, const LstmHeadVars& vars, double dropout_rate,
                         Mode mode, Rng& rng);

/// Embedding FC -> dropout -> position / quaternion FCs.
PoseOutputVars fc_baseline_head(Var features, const FcHeadVars& vars,
                                double dropout_rate, Mode mode, Rng& rng);

/// A pose regressor: optional tiny-cnn backbone plus an LSTM or FC head.
class PoseModel {
 public:
  /// Glorot-uniform weights, zero biases except the LSTM forget gates (1) and
  /// the quaternion output bias (1,0,0,0).
  static PoseModel create(const ModelSpec& spec, std::uint64_t seed);

  /// Wraps existing parameters; names and shapes are verified against spec.
  static PoseModel from_params(const ModelSpec& spec, ParamSet params);

  const ModelSpec& spec() const noexcept { return spec_; }
  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }

  /// `input` is features [B x F] or images [B x C x S x S]; `bound` are the
  /// parameter leaves from params().bind(tape).
  ForwardOutput forward(Var input, const std::vector<Var>& bound, Mode mode,
                        Rng& rng) const;

  struct Prediction {
    Vec3 p;
    Quat q_raw;
  };
  /// Eval-mode forward without gradients.
  std::vector<Prediction> predict(const Tensor& input) const;

  /// Scalar count of the final position/quaternion FCs.
  std::size_t regression_param_count() const;

 private:
  PoseModel(ModelSpec spec, ParamSet params);

  Var backbone(Var input, const std::vector<Var>& bound,
               std::vector<PoseOutputVars>* aux) const;

  ModelSpec spec_;
  ParamSet params_;
};

/// Builds the expected parameter layout for a spec, all zeros.
ParamSet zero_params(const ModelSpec& spec);

/// Embedding width that gives an FC-head model about as many parameters as
/// the LSTM-head model described by `lstm_spec`.
std::size_t parameter_matched_embed_dim(const ModelSpec& lstm_spec);

}  // namespace posereg
