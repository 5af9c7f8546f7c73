// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "posereg/config.hpp"
#include "posereg/report.hpp"
#include "posereg/trainer.hpp"

namespace posereg {

struct TrainArtifacts {
  std::filesystem::path final_checkpoint;
  std::filesystem::path best_checkpoint;
  std::filesystem::path log_csv;
  std::filesystem::path report_json;
  EvalReport report;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  std::uint64_t final_checkpoint_hash = 0;
};

/// Trains, then writes config.json, train_log.csv, final.ckpt, best.ckpt and
/// report.json (test split, final model) into config.output_dir. Progress goes
/// to stderr every log_every steps unless `quiet`.
TrainArtifacts cmd_train(const RunConfig& config, bool quiet = false);

/// Evaluates a checkpoint on "train" or "test". The dataset comes from the
/// checkpoint's embedded config unless `data` overrides it. Writes the report
/// to `output` when non-empty.
EvalReport cmd_eval(const std::filesystem::path& checkpoint, const std::string& split,
                    const std::optional<DatasetSpec>& data = std::nullopt,
                    const std::filesystem::path& output = {});

/// Report built from explicit predictions (quaternions normalized first).
EvalReport evaluate_poses(const DataSplit& split, std::span<const Pose> predicted,
                          const std::string& scene, const std::string& split_name,
                          const std::string& config_hash);

struct AblationOptions {
  /// Size the FC head's embedding to match the LSTM model's parameter count
  /// instead of using the same 2048-d embedding.
  bool parameter_matched = false;
  /// One paired run per seed; empty means just config.seed.
  std::vector<std::uint64_t> seeds;
  /// Also reseed the synthetic scene with each seed.
  bool vary_scene = true;
  bool quiet = true;
};

struct AblationRun {
  std::uint64_t seed = 0;
  EvalReport lstm;
  EvalReport fc;
  int pos_improvement = 0;
  int ori_improvement = 0;
};

struct AblationResult {
  std::vector<AblationRun> runs;
  /// Dotted config keys whose values differ between the two heads.
  std::vector<std::string> config_diff;
  /// Seeds where the LSTM head's median position error <= the FC head's.
  std::size_t lstm_wins = 0;
};

/// Trains the LSTM head and the FC baseline under identical data, seed and
/// step budget; writes ablation.json / ablation.csv into config.output_dir.
AblationResult cmd_ablate(const RunConfig& config, const AblationOptions& options = {});

/// Dotted paths of differing leaves between two config JSON documents.
std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b);

struct ReportOutputs {
  std::string csv;
  std::string json;
  std::vector<std::string> svgs;
};

/// Summary CSV + JSON (and an SVG histogram per report) written under
/// `out_prefix` + {".csv", ".json", "_<i>.svg"}.
ReportOutputs cmd_report(std::span<const std::filesystem::path> reports,
                         const std::filesystem::path& out_prefix, bool with_svg);

/// Writes a synthetic scene as a features dataset: train.txt, test.txt and
/// features.prfs (plus a ready-to-use config.json) in `out_dir`.
void cmd_synth_gen(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace posereg
