// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "posereg/random.hpp"
#include "posereg/tape.hpp"
#include "posereg/tensor.hpp"

namespace posereg {

enum class Mode { train, eval };

/// Grid the 2048-d embedding is folded into before the directional sweeps.
inline constexpr std::size_t kGridRows = 32;
inline constexpr std::size_t kGridCols = 64;
inline constexpr std::size_t kGridSize = kGridRows * kGridCols;

// ---- Plain tensor kernels (no tape) ---------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);

/// Row-major fold: element i lands at (i / 64, i % 64). Accepts [2048] or
/// [B x 2048]; returns [32 x 64] or [B x 32 x 64].
Tensor grid_fold(const Tensor& v);
Tensor grid_unfold(const Tensor& grid);

// ---- Tape ops --------------------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double s);
Var sigmoid(Var x);
Var tanh(Var x);
Var relu(Var x);

/// x [B x O] + b [O] broadcast over rows.
Var add_bias(Var x, Var b);

/// Fully connected layer y = x W^T + b with x [B x F], W [O x F], b [O].
Var fc(Var x, Var w, Var b);

/// Concatenates rank-1 vectors, or [B x d_i] matrices along the last axis.
Var concat(std::span<const Var> parts);

/// Columns [begin, end) of a [B x d] matrix.
Var slice_cols(Var x, std::size_t begin, std::size_t end);

Var reshape(Var x, Shape shape);
Var grid_fold(Var v);
Var grid_unfold(Var grid);

Var sum(Var x);
Var mean(Var x);
Var sum_squares(Var x);

/// Inverted dropout. Train mode zeroes each element with probability `rate`
/// and scales survivors by 1/(1-rate); eval mode is the identity.
Var dropout(Var x, double rate, Rng& rng, Mode mode);

}  // namespace posereg
