// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/dataset.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "posereg/errors.hpp"
#include "posereg/random.hpp"

namespace posereg {

namespace fs = std::filesystem;

// ---- Manifests --------------------------------------------------------------

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> split_tokens(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Header lines shipped with the public Cambridge Landmarks pose files.
bool is_known_header(std::string_view line) {
  return line == "Visual Landmark Dataset V1" ||
         line == "ImageFile, Camera Position [X Y Z W P Q R]";
}

std::string infer_split(const fs::path& path) {
  const std::string name = path.filename().string();
  if (name.find("train") != std::string::npos) return "train";
  if (name.find("test") != std::string::npos) return "test";
  return "";
}

}  // namespace

DatasetManifest parse_manifest(std::string_view text, const std::string& source,
                               const fs::path& root, const ManifestOptions& options) {
  DatasetManifest manifest;
  manifest.root = root;
  manifest.split = options.split.empty() ? infer_split(source) : options.split;
  std::set<std::string, std::less<>> seen;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) {
      const std::string_view comment = trim(line.substr(hash + 1));
      if (comment.starts_with("frame:")) {
        manifest.frame_note = std::string(trim(comment.substr(6)));
      }
      line = line.substr(0, hash);
    }
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    if (manifest.records.empty() && is_known_header(body)) continue;

    const std::vector<Token> tokens = split_tokens(line);
    if (tokens.size() < 8) {
      throw ParseError(source, line_no, line.size() + 1,
                       fmt::format("expected 'path tx ty tz qw qx qy qz', found {} field(s)",
                                   tokens.size()));
    }
    if (tokens.size() > 8) {
      throw ParseError(source, line_no, tokens[8].column,
                       "unexpected field '" + std::string(tokens[8].text) + "'");
    }
    double v[7];
    for (int k = 0; k < 7; ++k) {
      const Token& tok = tokens[k + 1];
      const char* first = tok.text.data();
      const char* last = first + tok.text.size();
      auto [ptr, ec] = std::from_chars(first, last, v[k]);
      if (ec != std::errc() || ptr != last) {
        throw ParseError(source, line_no, tok.column,
                         "not a number: '" + std::string(tok.text) + "'");
      }
      if (!std::isfinite(v[k])) {
        throw DataError(fmt::format("{}:{}:{}: non-finite pose value", source, line_no,
                                    tok.column));
      }
    }
    ManifestRecord rec;
    rec.path = std::string(tokens[0].text);
    rec.pose.p = {v[0], v[1], v[2]};
    try {
      rec.pose.q = quat_standardize({v[3], v[4], v[5], v[6]});
    } catch (const NumericError&) {
      throw DataError(fmt::format("{}:{}:{}: degenerate quaternion", source, line_no,
                                  tokens[4].column));
    }
    if (!seen.insert(rec.path).second) {
      throw DataError(fmt::format("{}:{}: duplicate record '{}'", source, line_no, rec.path));
    }
    if (options.check_files && !fs::exists(root / rec.path)) {
      throw DataError(fmt::format("{}:{}: missing file {}", source, line_no,
                                  (root / rec.path).string()));
    }
    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

DatasetManifest load_manifest(const fs::path& path, const ManifestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ManifestOptions opts = options;
  if (opts.split.empty()) opts.split = infer_split(path);
  return parse_manifest(text, path.string(), path.parent_path(), opts);
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  std::string out;
  if (!manifest.frame_note.empty()) out += "# frame: " + manifest.frame_note + "\n";
  for (const auto& r : manifest.records) {
    const Pose& p = r.pose;
    out += fmt::format("{} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g}\n", r.path,
                       p.p[0], p.p[1], p.p[2], p.q[0], p.q[1], p.q[2], p.q[3]);
  }
  return out;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << serialize_manifest(manifest);
}

// ---- Feature store ----------------------------------------------------------

namespace {

constexpr char kStoreMagic[4] = {'P', 'R', 'F', 'S'};

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const std::string& buf, std::size_t& pos, const fs::path& path) {
  if (pos + sizeof(T) > buf.size()) throw DataError(path.string() + ": truncated feature store");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return v;
}

}  // namespace

void FeatureStore::add(const std::string& id, const Tensor& feature) {
  if (feature.numel() != dim_) {
    throw DimensionError(fmt::format("feature store: '{}' has {} values, store dim is {}", id,
                                     feature.numel(), dim_));
  }
  if (contains(id)) throw DataError("feature store: duplicate id '" + id + "'");
  index_.emplace(id, ids_.size());
  ids_.push_back(id);
  values_.insert(values_.end(), feature.data().begin(), feature.data().end());
}

Tensor FeatureStore::get(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("feature store: no feature for id '" + id + "'");
  const auto begin = values_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_);
  return Tensor({dim_}, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(dim_)));
}

void FeatureStore::save(const fs::path& path) const {
  std::string buf(kStoreMagic, 4);
  put_le<std::uint32_t>(buf, kVersion);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(dim_));
  put_le<std::uint64_t>(buf, ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(ids_[i].size()));
    buf += ids_[i];
    for (std::size_t k = 0; k < dim_; ++k) {
      put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(values_[i * dim_ + k]));
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature store " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

FeatureStore FeatureStore::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature store " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 || std::memcmp(buf.data(), kStoreMagic, 4) != 0) {
    throw DataError(path.string() + ": not a feature store (bad magic)");
  }
  std::size_t pos = 4;
  const auto version = get_le<std::uint32_t>(buf, pos, path);
  if (version != kVersion) {
    throw DataError(fmt::format("{}: unsupported feature store version {}", path.string(),
                                version));
  }
  FeatureStore store(get_le<std::uint32_t>(buf, pos, path));
  const auto count = get_le<std::uint64_t>(buf, pos, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint32_t>(buf, pos, path);
    if (pos + len > buf.size()) throw DataError(path.string() + ": truncated feature store");
    std::string id = buf.substr(pos, len);
    pos += len;
    Tensor f({store.dim_});
    for (std::size_t k = 0; k < store.dim_; ++k) {
      f[k] = std::bit_cast<double>(get_le<std::uint64_t>(buf, pos, path));
    }
    store.add(id, f);
  }
  if (pos != buf.size()) throw DataError(path.string() + ": trailing bytes in feature store");
  return store;
}

// ---- Samples ----------------------------------------------------------------

Tensor extract_features(const FeatureStore& store, const Sample& sample) {
  return store.get(sample.id);
}

DataSplit attach_features(const DatasetManifest& manifest, const FeatureStore& store) {
  DataSplit split;
  split.samples.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    split.samples.push_back({r.path, store.get(r.path), r.pose});
  }
  return split;
}

DataSplit load_images(const DatasetManifest& manifest, std::size_t base_size) {
  DataSplit split;
  split.samples.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    Image img = resize_shorter_side(read_ppm(manifest.root / r.path), base_size);
    split.samples.push_back({r.path, std::move(img), r.pose});
  }
  return split;
}

// ---- Synthetic scenes -------------------------------------------------------

void SynthSpec::validate() const {
  if (!(extent_m > 0.0)) throw ConfigError("synth: extent_m must be positive");
  if (n_train < 10) throw ConfigError("synth: n_train must be at least 10");
  if (feature_dim == 0) throw ConfigError("synth: feature_dim must be positive");
  if (!(bandwidth > 0.0) || noise < 0.0) throw ConfigError("synth: bad bandwidth/noise");
}

namespace {
constexpr std::size_t kPoseCode = 7;
}

SynthFeatureMap::SynthFeatureMap(const SynthSpec& spec)
    : dim_(spec.feature_dim), extent_(spec.extent_m) {
  Rng rng(derive_seed(spec.seed, 1));
  std::normal_distribution<double> freq(0.0, spec.bandwidth);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  omega_.resize(dim_ * kPoseCode);
  for (double& w : omega_) w = freq(rng);
  phase_.resize(dim_);
  for (double& p : phase_) p = phase(rng);
}

Tensor SynthFeatureMap::operator()(const Pose& pose) const {
  std::array<double, kPoseCode> z;
  for (int k = 0; k < 3; ++k) z[k] = 2.0 * pose.p[k] / extent_;
  std::copy(pose.q.begin(), pose.q.end(), z.begin() + 3);
  Tensor f({dim_});
  for (std::size_t i = 0; i < dim_; ++i) {
    double a = phase_[i];
    for (std::size_t k = 0; k < kPoseCode; ++k) a += omega_[i * kPoseCode + k] * z[k];
    f[i] = std::cos(a);
  }
  return f;
}

namespace {

DataSplit synth_split(const SynthSpec& spec, const SynthFeatureMap& map, std::size_t n,
                      std::uint64_t pose_stream, std::uint64_t noise_stream,
                      const char* prefix) {
  Rng pose_rng(derive_seed(spec.seed, pose_stream));
  Rng noise_rng(derive_seed(spec.seed, noise_stream));
  std::uniform_real_distribution<double> coord(-0.5 * spec.extent_m, 0.5 * spec.extent_m);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DataSplit split;
  split.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Pose pose;
    for (double& c : pose.p) c = coord(pose_rng);
    Quat q;
    do {
      for (double& c : q) c = gauss(pose_rng);
    } while (std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]) < 1e-6);
    pose.q = quat_standardize(q);
    Tensor f = map(pose);
    if (spec.noise > 0.0) {
      for (double& v : f.data()) v += spec.noise * gauss(noise_rng);
    }
    split.samples.push_back({fmt::format("{}/{:06d}", prefix, i), std::move(f), pose});
  }
  return split;
}

}  // namespace

SynthScene synth_scene(const SynthSpec& spec) {
  spec.validate();
  const SynthFeatureMap map(spec);
  return {synth_split(spec, map, spec.n_train, 2, 4, "train"),
          synth_split(spec, map, spec.n_test, 3, 5, "test")};
}

}  // namespace posereg
