// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "posereg/config.hpp"
#include "posereg/dataset.hpp"
#include "posereg/image.hpp"
#include "posereg/model.hpp"
#include "posereg/optim.hpp"
#include "posereg/report.hpp"

namespace posereg {

/// Train and test splits of one scene, ready for batching.
struct Dataset {
  std::string scene;
  DataSplit train;
  DataSplit test;
  /// Mean of the training images (image datasets only).
  std::optional<MeanImage> mean;
};

Dataset load_dataset(const DatasetSpec& spec);

/// Stacks a batch into the model input: features [B x F], or preprocessed
/// images [B x C x crop x crop].
Tensor batch_input(const DataSplit& split, std::span<const std::size_t> indices,
                   const DatasetSpec& spec, const MeanImage* mean, Mode mode, Rng& rng);

std::vector<Pose> batch_poses(const DataSplit& split, std::span<const std::size_t> indices);

/// Training objective for one batch; fills one gradient per parameter when
/// `grads` is non-null. `rng` drives dropout.
double batch_objective(const PoseModel& model, const Tensor& input,
                       std::span<const Pose> truth, const OptimConfig& cfg, Mode mode,
                       Rng& rng, std::vector<Tensor>* grads);

/// Forward (train mode) -> objective -> backward -> Adam. Returns the
/// objective before the update.
double train_step(const Dataset& data, std::span<const std::size_t> batch,
                  PoseModel& model, AdamState& state, const RunConfig& config,
                  Rng& dropout_rng, Rng& crop_rng);

struct TrainLogRow {
  std::size_t step = 0;
  double objective = 0.0;
  double lr = 0.0;
};

struct EvalLogRow {
  std::size_t step = 0;
  double med_pos = 0.0;
  double med_ori = 0.0;
};

struct TrainOutcome {
  PoseModel final_model;
  /// Model at the end of the logging window with the lowest mean objective.
  PoseModel best_model;
  std::size_t best_step = 0;
  std::vector<TrainLogRow> log;
  std::vector<EvalLogRow> evals;
};

using TrainObserver = std::function<void(const TrainLogRow&)>;

/// The freshly initialized model that train_model starts from.
PoseModel initial_model(const RunConfig& config);

/// Full deterministic training run for `config.iterations` steps.
TrainOutcome train_model(const RunConfig& config, const Dataset& data,
                         const TrainObserver& observer = {});

/// Eval-mode, central-crop predictions on a split; quaternions normalized.
EvalReport evaluate_model(const PoseModel& model, const DataSplit& split,
                          const std::string& split_name, const RunConfig& config,
                          const Dataset& data);

}  // namespace posereg
