// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "posereg/tape.hpp"

namespace posereg {

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t pad = 1;
};

/// Output extent of a square-kernel convolution along one axis.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, ConvGeometry g);

/// 2-D cross-correlation, NCHW layout: x [B x C x H x W], w [O x C x k x k],
/// b [O] -> [B x O x H' x W']. Zero padding.
Var conv2d(Var x, Var w, Var b, ConvGeometry geometry);

/// Mean over the spatial axes: [B x C x H x W] -> [B x C].
Var spatial_mean(Var x);

}  // namespace posereg
