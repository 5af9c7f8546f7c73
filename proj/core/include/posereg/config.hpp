// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "posereg/dataset.hpp"
#include "posereg/model.hpp"
#include "posereg/optim.hpp"

namespace posereg {

enum class DatasetKind { synth, features, images };

std::string_view to_string(DatasetKind k);
DatasetKind parse_dataset_kind(std::string_view s);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::synth;
  /// Label used in reports.
  std::string scene = "synth";
  SynthSpec synth;
  /// Manifests for the features / images kinds.
  std::string train_manifest;
  std::string test_manifest;
  /// Feature store (features kind); ids are the manifest record paths.
  std::string feature_store;
  /// Images: shorter side is resized to base_size, then cropped to crop.
  std::size_t base_size = 256;
  std::size_t crop = 224;

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

/// Everything that determines a run. Serializes to JSON; the hash of that JSON
/// (output directory excluded) identifies the run in checkpoints and reports.
struct RunConfig {
  DatasetSpec data;
  ModelSpec model;
  OptimConfig optim;
  /// Training budget in optimizer steps.
  std::size_t iterations = 2000;
  /// Test-split evaluation cadence in steps; 0 evaluates only at the end.
  std::size_t eval_every = 0;
  std::size_t log_every = 10;
  std::string output_dir = "runs/default";
  std::uint64_t seed = 0;

  /// Throws ConfigError before any compute is spent.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Pretty JSON. `with_output_dir=false` gives the identity form used for
/// hashing and embedding in checkpoints.
std::string to_json(const RunConfig& config, bool with_output_dir = true);

/// Missing keys keep their defaults; unknown keys raise ConfigError.
RunConfig run_config_from_json(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t config_hash(const RunConfig& config);
/// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);

/// Named orientation-weight presets: indoor-min 120, indoor-max 750,
/// outdoor-min 250, outdoor-max 2000, tum-lsi 1000.
std::optional<double> beta_preset(std::string_view name);

}  // namespace posereg
