// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "posereg/ops.hpp"
#include "posereg/random.hpp"
#include "posereg/tensor.hpp"

namespace posereg {

/// 8-bit interleaved image, row-major HWC.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<std::uint8_t> pixels;

  static Image filled(std::size_t height, std::size_t width, std::uint8_t value);

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Binary (P6) or ASCII (P3) PPM with maxval 255.
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& image);

/// Bilinear resize so the shorter side equals `base`; 0 leaves the image as is.
Image resize_shorter_side(const Image& image, std::size_t base);

/// Per-pixel, per-channel mean of equally sized images.
struct MeanImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<double> values;

  friend bool operator==(const MeanImage&, const MeanImage&) = default;
};

/// Throws UsageError on an empty list, DataError on mismatched sizes.
MeanImage compute_mean_image(std::span<const Image> images);

/// Crops `crop x crop` (random offset in train mode, centered in test/eval
/// mode), subtracts the identically cropped mean and divides by 255, so values
/// lie in [-1, 1]. Returns [crop x crop x C].
Tensor preprocess(const Image& image, const MeanImage& mean, Mode mode, std::size_t crop,
                  Rng& rng);

/// [H x W x C] -> [C x H x W].
Tensor hwc_to_chw(const Tensor& hwc);

}  // namespace posereg
