// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "posereg/image.hpp"
#include "posereg/pose_math.hpp"
#include "posereg/tensor.hpp"

namespace posereg {

// ---- Manifests --------------------------------------------------------------

struct ManifestRecord {
  std::string path;
  Pose pose;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// Pose list in the Cambridge Landmarks text convention:
///   relpath tx ty tz qw qx qy qz
/// '#' starts a comment; "# frame: ..." is kept as the coordinate frame note.
struct DatasetManifest {
  std::filesystem::path root;
  std::string split;
  std::string frame_note;
  std::vector<ManifestRecord> records;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct ManifestOptions {
  /// Require every record path to exist under the manifest's directory.
  bool check_files = true;
  /// Split label; empty infers "train"/"test" from the file name.
  std::string split;
};

/// Quaternions are normalized and sign-canonicalized on load. Malformed lines
/// raise ParseError with line and column; non-finite values and duplicate ids
/// raise DataError.
DatasetManifest parse_manifest(std::string_view text, const std::string& source,
                               const std::filesystem::path& root,
                               const ManifestOptions& options = {});
DatasetManifest load_manifest(const std::filesystem::path& path,
                              const ManifestOptions& options = {});

/// Text form that parses back to an identical manifest (17 significant digits).
std::string serialize_manifest(const DatasetManifest& manifest);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// ---- Feature store ----------------------------------------------------------

/// Precomputed per-image embeddings. Binary layout (little-endian):
///   "PRFS" | u32 version (=1) | u32 dim | u64 count |
///   count x ( u32 id_len | id bytes | dim x f64 )
class FeatureStore {
 public:
  static constexpr std::uint32_t kVersion = 1;

  explicit FeatureStore(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  void add(const std::string& id, const Tensor& feature);
  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  /// Throws DataError for unknown ids.
  Tensor get(const std::string& id) const;

  void save(const std::filesystem::path& path) const;
  static FeatureStore load(const std::filesystem::path& path);

  friend bool operator==(const FeatureStore& a, const FeatureStore& b) {
    return a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.values_ == b.values_;
  }

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// ---- Samples ----------------------------------------------------------------

struct Sample {
  std::string id;
  /// Image or precomputed feature vector [F].
  std::variant<Image, Tensor> payload;
  Pose pose;

  bool has_image() const { return std::holds_alternative<Image>(payload); }
  const Image& image() const { return std::get<Image>(payload); }
  const Tensor& feature() const { return std::get<Tensor>(payload); }
};

struct DataSplit {
  std::vector<Sample> samples;
};

/// Lookup of a sample's feature in a store; DataError when missing.
Tensor extract_features(const FeatureStore& store, const Sample& sample);

/// Samples whose payloads are taken from a feature store keyed by record path.
DataSplit attach_features(const DatasetManifest& manifest, const FeatureStore& store);

/// Samples carrying images loaded (PPM) from the manifest root and resized so
/// the shorter side equals `base_size` (0 keeps the original size).
DataSplit load_images(const DatasetManifest& manifest, std::size_t base_size);

// ---- Synthetic scenes -------------------------------------------------------

struct SynthSpec {
  std::uint64_t seed = 7;
  std::size_t n_train = 200;
  std::size_t n_test = 50;
  double extent_m = 10.0;
  std::size_t feature_dim = 64;
  /// Standard deviation of the random projection frequencies.
  double bandwidth = 0.5;
  /// Standard deviation of additive feature noise.
  double noise = 0.01;

  void validate() const;

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

/// Fixed smooth pose -> feature map: random Fourier features
///   f_k = cos(ω_k · z + φ_k),  z = (2p/extent, q) ∈ R^7
/// with ω_k ~ N(0, bandwidth²), φ_k ~ U[0, 2π). Poses carry canonical
/// (w >= 0) quaternions, so the map is a function of the pose.
class SynthFeatureMap {
 public:
  explicit SynthFeatureMap(const SynthSpec& spec);
  Tensor operator()(const Pose& pose) const;

 private:
  std::size_t dim_;
  double extent_;
  std::vector<double> omega_;  // [dim x 12]
  std::vector<double> phase_;  // [dim]
};

struct SynthScene {
  DataSplit train;
  DataSplit test;
};

/// Poses uniform in the box [-extent/2, extent/2]^3 with orientations uniform
/// on S^3 (normalized Gaussians, canonicalized). Pure function of `spec`.
SynthScene synth_scene(const SynthSpec& spec);

}  // namespace posereg
