// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

#include "posereg/tape.hpp"
#include "posereg/tensor.hpp"

namespace posereg {

/// Gate blocks inside the stacked LSTM matrices, in storage order.
enum class Gate : std::size_t { input = 0, forget = 1, output = 2, cell = 3 };

/// Standard LSTM cell parameters with the four gates stacked row-wise:
///   w [4H x D] input-to-gate, u [4H x H] hidden-to-gate, b [4H] bias,
/// gate order (i, f, o, g). Rows [k*H, (k+1)*H) belong to gate k.
struct LstmWeights {
  Tensor w;
  Tensor u;
  Tensor b;

  static LstmWeights zeros(std::size_t hidden, std::size_t input);

  std::size_t hidden() const { return u.dim(1); }
  std::size_t input() const { return w.dim(1); }

  /// Throws DimensionError unless the three tensors agree on H and D.
  void validate() const;

  /// Copy of the [H x D] / [H x H] / [H] block belonging to one gate.
  Tensor gate_w(Gate g) const;
  Tensor gate_u(Gate g) const;
  Tensor gate_b(Gate g) const;
  void set_gate(Gate g, const Tensor& w_block, const Tensor& u_block,
                const Tensor& b_block);
};

struct LstmState {
  Tensor h;
  Tensor c;
};

/// Values saved by the forward pass of one cell step.
struct LstmCellCache {
  Tensor x;       // [B x D]
  Tensor h_prev;  // [B x H]
  Tensor c_prev;  // [B x H]
  Tensor gates;   // [B x 4H], post-activation (i, f, o, g)
  Tensor tanh_c;  // [B x H]
};

/// One step:
///   i = σ(W_i x + U_i h + b_i), f = σ(...), o = σ(...), g = tanh(...)
///   c' = f ⊙ c + i ⊙ g,  h' = o ⊙ tanh(c')
/// x is [D] or [B x D]; states match x's rank.
LstmState lstm_cell(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                    const LstmWeights& weights, LstmCellCache* cache = nullptr);

struct LstmCellGrads {
  Tensor dx;
  Tensor dh_prev;
  Tensor dc_prev;
};

/// Backward of one step given upstream dh', dc' ([B x H]). Parameter
/// gradients are added into `dweights`, which must be shaped like the weights.
LstmCellGrads lstm_cell_backward(const LstmCellCache& cache, const Tensor& dh,
                                 const Tensor& dc, const LstmWeights& weights,
                                 LstmWeights& dweights);

enum class Direction { up, down, left, right };

std::string_view to_string(Direction d);
/// Per-step input width: 32 (one column) for left/right, 64 (one row) for up/down.
std::size_t sweep_input_size(Direction d);
std::size_t sweep_steps(Direction d);

/// Input at step `t` of a sweep over grid [B x 32 x 64], as [B x D].
///   left:  columns 0..63     right: columns 63..0
///   down:  rows 0..31        up:    rows 31..0
Tensor sweep_step_input(const Tensor& grid, Direction d, std::size_t t);

/// Runs the LSTM from zero state along `d` and returns the final hidden state
/// ([H] for a [32 x 64] grid, [B x H] for a batch). Throws ConfigError when
/// the weights' input width does not match the direction.
Tensor directional_sweep(const Tensor& grid, Direction d, const LstmWeights& weights);

// ---- Tape versions --------------------------------------------------------

struct LstmVars {
  Var w;
  Var u;
  Var b;
};

struct LstmStateVars {
  Var h;
  Var c;
};

LstmStateVars lstm_cell(Var x, Var h_prev, Var c_prev, const LstmVars& weights);

/// Whole sweep recorded as one node; backward is truncation-free BPTT.
Var directional_sweep(Var grid, Direction d, const LstmVars& weights);

}  // namespace posereg
