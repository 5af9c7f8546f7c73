// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "posereg/errors.hpp"

namespace posereg {

namespace {

// Next whitespace-delimited PPM header token, skipping '#' comments.
std::string next_token(const std::string& buf, std::size_t& pos) {
  for (;;) {
    while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  return buf.substr(start, pos - start);
}

std::size_t parse_extent(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(tok, &used);
    if (used != tok.size() || v == 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError(path.string() + ": bad PPM header field '" + tok + "'");
  }
}

}  // namespace

Image Image::filled(std::size_t height, std::size_t width, std::uint8_t value) {
  Image img;
  img.height = height;
  img.width = width;
  img.pixels.assign(height * width * img.channels, value);
  return img;
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  const std::string magic = next_token(buf, pos);
  if (magic != "P6" && magic != "P3") {
    throw DataError(path.string() + ": not a PPM image (magic '" + magic + "')");
  }
  Image img;
  img.width = parse_extent(next_token(buf, pos), path);
  img.height = parse_extent(next_token(buf, pos), path);
  if (parse_extent(next_token(buf, pos), path) != 255) {
    throw DataError(path.string() + ": only maxval 255 is supported");
  }
  const std::size_t n = img.width * img.height * img.channels;
  img.pixels.resize(n);
  if (magic == "P6") {
    ++pos;  // single whitespace after maxval
    if (buf.size() < pos + n) throw DataError(path.string() + ": truncated pixel data");
    std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(pos), n, img.pixels.begin());
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string tok = next_token(buf, pos);
      if (tok.empty()) throw DataError(path.string() + ": truncated pixel data");
      const unsigned long v = std::stoul(tok);
      if (v > 255) throw DataError(path.string() + ": pixel value out of range");
      img.pixels[i] = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 3) throw UsageError("write_ppm: only 3-channel images");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path.string());
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

Image resize_shorter_side(const Image& image, std::size_t base) {
  if (base == 0) return image;
  const std::size_t shorter = std::min(image.height, image.width);
  if (shorter == base) return image;
  const double factor = static_cast<double>(base) / static_cast<double>(shorter);
  Image out;
  out.channels = image.channels;
  out.height = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(static_cast<double>(image.height) * factor)));
  out.width = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(static_cast<double>(image.width) * factor)));
  if (image.height <= image.width) out.height = base; else out.width = base;
  out.pixels.resize(out.height * out.width * out.channels);
  const double sy = static_cast<double>(image.height) / static_cast<double>(out.height);
  const double sx = static_cast<double>(image.width) / static_cast<double>(out.width);
  for (std::size_t y = 0; y < out.height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(image.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out.width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(image.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < image.channels; ++c) {
        const double top = (1 - wx) * image.at(y0, x0, c) + wx * image.at(y0, x1, c);
        const double bot = (1 - wx) * image.at(y1, x0, c) + wx * image.at(y1, x1, c);
        out.at(y, x, c) =
            static_cast<std::uint8_t>(std::clamp(std::lround((1 - wy) * top + wy * bot), 0L, 255L));
      }
    }
  }
  return out;
}

MeanImage compute_mean_image(std::span<const Image> images) {
  if (images.empty()) throw UsageError("compute_mean_image: empty training split");
  const Image& first = images.front();
  MeanImage mean{first.height, first.width, first.channels,
                 std::vector<double>(first.pixels.size(), 0.0)};
  for (const Image& img : images) {
    if (img.height != first.height || img.width != first.width ||
        img.channels != first.channels) {
      throw DataError("compute_mean_image: image sizes differ (" +
                      std::to_string(img.width) + "x" + std::to_string(img.height) +
                      " vs " + std::to_string(first.width) + "x" +
                      std::to_string(first.height) + ")");
    }
    for (std::size_t i = 0; i < img.pixels.size(); ++i) mean.values[i] += img.pixels[i];
  }
  const double n = static_cast<double>(images.size());
  for (double& v : mean.values) v /= n;
  return mean;
}

Tensor preprocess(const Image& image, const MeanImage& mean, Mode mode, std::size_t crop,
                  Rng& rng) {
  if (crop == 0 || image.height < crop || image.width < crop) {
    throw DataError("preprocess: image " + std::to_string(image.width) + "x" +
                    std::to_string(image.height) + " is smaller than crop " +
                    std::to_string(crop));
  }
  if (mean.height != image.height || mean.width != image.width ||
      mean.channels != image.channels) {
    throw DataError("preprocess: mean image size does not match the image");
  }
  std::size_t top = (image.height - crop) / 2;
  std::size_t left = (image.width - crop) / 2;
  if (mode == Mode::train) {
    top = std::uniform_int_distribution<std::size_t>(0, image.height - crop)(rng);
    left = std::uniform_int_distribution<std::size_t>(0, image.width - crop)(rng);
  }
  const std::size_t ch = image.channels;
  Tensor out({crop, crop, ch});
  for (std::size_t y = 0; y < crop; ++y) {
    for (std::size_t x = 0; x < crop; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t src = ((top + y) * image.width + left + x) * ch + c;
        out[(y * crop + x) * ch + c] = (image.pixels[src] - mean.values[src]) / 255.0;
      }
    }
  }
  return out;
}

Tensor hwc_to_chw(const Tensor& hwc) {
  if (hwc.rank() != 3) throw DimensionError("hwc_to_chw: expected rank 3");
  const std::size_t h = hwc.dim(0), w = hwc.dim(1), c = hwc.dim(2);
  Tensor out({c, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t k = 0; k < c; ++k) out[(k * h + y) * w + x] = hwc[(y * w + x) * c + k];
    }
  }
  return out;
}

}  // namespace posereg
