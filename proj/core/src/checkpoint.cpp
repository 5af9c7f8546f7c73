// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "posereg/config.hpp"
#include "posereg/errors.hpp"

namespace posereg {

namespace {

constexpr char kMagic[4] = {'P', 'R', 'C', 'K'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
  }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void put_bytes(const std::string& s) { buf_ += s; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Cursor {
 public:
  Cursor(const std::string& buf, const std::string& source) : buf_(buf), source_(source) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw DataError(source_ + ": truncated checkpoint");
  }
  const std::string& buf_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.put_bytes(std::string(kMagic, 4));
  w.put<std::uint32_t>(Checkpoint::kVersion);
  w.put<std::uint64_t>(ckpt.config_hash);
  w.put<std::uint64_t>(ckpt.step);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.config_json.size()));
  w.put_bytes(ckpt.config_json);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& p : ckpt.params) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.name.size()));
    w.put_bytes(p.name);
    w.put<std::uint8_t>(p.is_bias ? 1 : 0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) w.put<std::uint64_t>(d);
    for (double v : p.value.data()) w.put_f64(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes, const std::string& source) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError(source + ": not a checkpoint (bad magic)");
  }
  Cursor c(bytes, source);
  c.get_bytes(4);
  const auto version = c.get<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    throw DataError(fmt::format("{}: unsupported checkpoint version {}", source, version));
  }
  Checkpoint ckpt;
  ckpt.config_hash = c.get<std::uint64_t>();
  ckpt.step = c.get<std::uint64_t>();
  ckpt.config_json = c.get_bytes(c.get<std::uint32_t>());
  const auto count = c.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = c.get_bytes(c.get<std::uint32_t>());
    const bool is_bias = c.get<std::uint8_t>() != 0;
    const auto rank = c.get<std::uint32_t>();
    if (rank == 0 || rank > 8) throw DataError(source + ": bad tensor rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = c.get<std::uint64_t>();
    Tensor t(shape);
    for (double& v : t.data()) v = c.get_f64();
    ckpt.params.add(std::move(name), std::move(t), is_bias);
  }
  if (!c.done()) throw DataError(source + ": trailing bytes in checkpoint");
  if (!ckpt.config_json.empty() && fnv1a64(ckpt.config_json) != ckpt.config_hash) {
    throw DataError(source + ": config hash does not match embedded config");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, path.string());
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

}  // namespace posereg
