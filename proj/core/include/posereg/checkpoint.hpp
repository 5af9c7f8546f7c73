// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "posereg/params.hpp"

namespace posereg {

/// Versioned binary snapshot of a model. Layout (little-endian):
///   "PRCK" | u32 version (=1) | u64 config_hash | u64 step |
///   u32 config_len | config JSON bytes | u32 count |
///   count x ( u32 name_len | name | u8 is_bias | u32 rank | rank x u64 dims |
///             numel x f64 )
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string config_json;
  std::uint64_t config_hash = 0;
  std::uint64_t step = 0;
  ParamSet params;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes, const std::string& source = "checkpoint");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a 64 of a file's bytes.
std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace posereg
