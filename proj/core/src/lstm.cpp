// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/lstm.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "eigen_view.hpp"
#include "posereg/errors.hpp"
#include "posereg/ops.hpp"

namespace posereg {

using detail::as_mat;
using detail::as_vec;

namespace {

constexpr std::size_t kGates = 4;

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Rows of a rank-1 or rank-2 tensor whose trailing width is `width`.
std::size_t batch_rows(const Tensor& t, std::size_t width, const char* what) {
  if (t.rank() == 1 && t.dim(0) == width) return 1;
  if (t.rank() == 2 && t.dim(1) == width) return t.dim(0);
  throw DimensionError(std::string("lstm_cell: ") + what + " has shape " +
                       to_string(t.shape()) + ", expected width " +
                       std::to_string(width));
}

std::size_t grid_batch(const Tensor& grid) {
  if (grid.rank() == 2 && grid.dim(0) == kGridRows && grid.dim(1) == kGridCols) return 1;
  if (grid.rank() == 3 && grid.dim(1) == kGridRows && grid.dim(2) == kGridCols) {
    return grid.dim(0);
  }
  throw DimensionError("directional_sweep: expected a 32x64 grid, got " +
                       to_string(grid.shape()));
}

void check_direction(Direction d, const LstmWeights& w) {
  if (w.input() != sweep_input_size(d)) {
    throw ConfigError("directional_sweep: " + std::string(to_string(d)) +
                      " sweep needs input width " +
                      std::to_string(sweep_input_size(d)) + ", weights have " +
                      std::to_string(w.input()));
  }
}

// Adds dx [B x D] (step t of direction d) into dgrid [B x 32 x 64].
void scatter_step_grad(Tensor& dgrid, Direction d, std::size_t t, const Tensor& dx) {
  const std::size_t batch = dx.dim(0);
  double* g = dgrid.data().data();
  const double* src = dx.data().data();
  switch (d) {
    case Direction::left:
    case Direction::right: {
      const std::size_t col = d == Direction::left ? t : kGridCols - 1 - t;
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t r = 0; r < kGridRows; ++r) {
          g[(b * kGridRows + r) * kGridCols + col] += src[b * kGridRows + r];
        }
      }
      break;
    }
    case Direction::up:
    case Direction::down: {
      const std::size_t row = d == Direction::down ? t : kGridRows - 1 - t;
      for (std::size_t b = 0; b < batch; ++b) {
        double* dst = g + (b * kGridRows + row) * kGridCols;
        for (std::size_t c = 0; c < kGridCols; ++c) dst[c] += src[b * kGridCols + c];
      }
      break;
    }
  }
}

}  // namespace

// ---- LstmWeights ------------------------------------------------------------

LstmWeights LstmWeights::zeros(std::size_t hidden, std::size_t input) {
  return {Tensor({kGates * hidden, input}), Tensor({kGates * hidden, hidden}),
          Tensor({kGates * hidden})};
}

void LstmWeights::validate() const {
  if (u.rank() != 2 || w.rank() != 2 || b.rank() != 1) {
    throw DimensionError("lstm weights: expected ranks (2,2,1)");
  }
  const std::size_t h = u.dim(1);
  if (u.dim(0) != kGates * h || w.dim(0) != kGates * h || b.dim(0) != kGates * h) {
    throw DimensionError("lstm weights: inconsistent shapes w" + to_string(w.shape()) +
                         " u" + to_string(u.shape()) + " b" + to_string(b.shape()));
  }
}

Tensor LstmWeights::gate_w(Gate g) const {
  const std::size_t h = hidden();
  Tensor out({h, input()});
  as_mat(out) = as_mat(w).middleRows(static_cast<std::size_t>(g) * h, h);
  return out;
}

Tensor LstmWeights::gate_u(Gate g) const {
  const std::size_t h = hidden();
  Tensor out({h, h});
  as_mat(out) = as_mat(u).middleRows(static_cast<std::size_t>(g) * h, h);
  return out;
}

Tensor LstmWeights::gate_b(Gate g) const {
  const std::size_t h = hidden();
  Tensor out({h});
  as_vec(out) = as_vec(b).segment(static_cast<std::size_t>(g) * h, h);
  return out;
}

void LstmWeights::set_gate(Gate g, const Tensor& w_block, const Tensor& u_block,
                           const Tensor& b_block) {
  const std::size_t h = hidden();
  const std::size_t k = static_cast<std::size_t>(g);
  if (w_block.shape() != Shape{h, input()} || u_block.shape() != Shape{h, h} ||
      b_block.shape() != Shape{h}) {
    throw DimensionError("lstm weights: gate block shapes do not match");
  }
  as_mat(w).middleRows(k * h, h) = as_mat(w_block);
  as_mat(u).middleRows(k * h, h) = as_mat(u_block);
  as_vec(b).segment(k * h, h) = as_vec(b_block);
}

// ---- Cell -------------------------------------------------------------------

LstmState lstm_cell(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                    const LstmWeights& weights, LstmCellCache* cache) {
  weights.validate();
  const std::size_t hid = weights.hidden();
  const std::size_t in = weights.input();
  const std::size_t rows = batch_rows(x, in, "input");
  if (batch_rows(h_prev, hid, "hidden state") != rows ||
      batch_rows(c_prev, hid, "cell state") != rows || h_prev.rank() != x.rank() ||
      c_prev.rank() != x.rank()) {
    throw DimensionError("lstm_cell: state shapes " + to_string(h_prev.shape()) +
                         ", " + to_string(c_prev.shape()) +
                         " do not match input " + to_string(x.shape()));
  }

  Tensor gates({rows, kGates * hid});
  auto z = as_mat(gates);
  z.noalias() = as_mat(x, rows, in) * as_mat(weights.w).transpose();
  z.noalias() += as_mat(h_prev, rows, hid) * as_mat(weights.u).transpose();
  z.rowwise() += as_vec(weights.b);

  const Shape state_shape = x.rank() == 1 ? Shape{hid} : Shape{rows, hid};
  LstmState out{Tensor(state_shape), Tensor(state_shape)};
  Tensor tanh_c({rows, hid});
  for (std::size_t r = 0; r < rows; ++r) {
    double* zr = gates.data().data() + r * kGates * hid;
    for (std::size_t j = 0; j < 3 * hid; ++j) zr[j] = sigmoid_scalar(zr[j]);
    for (std::size_t j = 3 * hid; j < 4 * hid; ++j) zr[j] = std::tanh(zr[j]);
    for (std::size_t j = 0; j < hid; ++j) {
      const double i = zr[j];
      const double f = zr[hid + j];
      const double o = zr[2 * hid + j];
      const double g = zr[3 * hid + j];
      const double c = f * c_prev[r * hid + j] + i * g;
      const double tc = std::tanh(c);
      out.c[r * hid + j] = c;
      out.h[r * hid + j] = o * tc;
      tanh_c[r * hid + j] = tc;
    }
  }
  if (cache) {
    cache->x = x.reshaped({rows, in});
    cache->h_prev = h_prev.reshaped({rows, hid});
    cache->c_prev = c_prev.reshaped({rows, hid});
    cache->gates = std::move(gates);
    cache->tanh_c = std::move(tanh_c);
  }
  return out;
}

LstmCellGrads lstm_cell_backward(const LstmCellCache& cache, const Tensor& dh,
                                 const Tensor& dc, const LstmWeights& weights,
                                 LstmWeights& dweights) {
  const std::size_t hid = weights.hidden();
  const std::size_t in = weights.input();
  const std::size_t rows = cache.x.dim(0);
  if (dh.numel() != rows * hid || dc.numel() != rows * hid) {
    throw DimensionError("lstm_cell_backward: upstream gradient shape mismatch");
  }

  Tensor dz({rows, kGates * hid});
  Tensor dc_prev({rows, hid});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* gr = cache.gates.data().data() + r * kGates * hid;
    double* dzr = dz.data().data() + r * kGates * hid;
    for (std::size_t j = 0; j < hid; ++j) {
      const std::size_t k = r * hid + j;
      const double i = gr[j];
      const double f = gr[hid + j];
      const double o = gr[2 * hid + j];
      const double g = gr[3 * hid + j];
      const double tc = cache.tanh_c[k];
      const double dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
      dzr[j] = dct * g * i * (1.0 - i);
      dzr[hid + j] = dct * cache.c_prev[k] * f * (1.0 - f);
      dzr[2 * hid + j] = dh[k] * tc * o * (1.0 - o);
      dzr[3 * hid + j] = dct * i * (1.0 - g * g);
      dc_prev[k] = dct * f;
    }
  }

  const auto dzm = as_mat(dz);
  as_mat(dweights.w).noalias() += dzm.transpose() * as_mat(cache.x);
  as_mat(dweights.u).noalias() += dzm.transpose() * as_mat(cache.h_prev);
  as_vec(dweights.b) += dzm.colwise().sum();

  LstmCellGrads grads{Tensor({rows, in}), Tensor({rows, hid}), std::move(dc_prev)};
  as_mat(grads.dx).noalias() = dzm * as_mat(weights.w);
  as_mat(grads.dh_prev).noalias() = dzm * as_mat(weights.u);
  return grads;
}

// ---- Sweeps -----------------------------------------------------------------

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::up: return "up";
    case Direction::down: return "down";
    case Direction::left: return "left";
    case Direction::right: return "right";
  }
  return "?";
}

std::size_t sweep_input_size(Direction d) {
  return d == Direction::left || d == Direction::right ? kGridRows : kGridCols;
}

std::size_t sweep_steps(Direction d) {
  return d == Direction::left || d == Direction::right ? kGridCols : kGridRows;
}

Tensor sweep_step_input(const Tensor& grid, Direction d, std::size_t t) {
  const std::size_t batch = grid_batch(grid);
  if (t >= sweep_steps(d)) throw UsageError("sweep step out of range");
  const std::size_t width = sweep_input_size(d);
  Tensor x({batch, width});
  const double* g = grid.data().data();
  switch (d) {
    case Direction::left:
    case Direction::right: {
      const std::size_t col = d == Direction::left ? t : kGridCols - 1 - t;
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t r = 0; r < kGridRows; ++r) {
          x[b * kGridRows + r] = g[(b * kGridRows + r) * kGridCols + col];
        }
      }
      break;
    }
    case Direction::up:
    case Direction::down: {
      const std::size_t row = d == Direction::down ? t : kGridRows - 1 - t;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* src = g + (b * kGridRows + row) * kGridCols;
        std::copy(src, src + kGridCols, x.data().data() + b * kGridCols);
      }
      break;
    }
  }
  return x;
}

namespace {

// Shared forward; fills per-step caches when requested.
Tensor run_sweep(const Tensor& grid, Direction d, const LstmWeights& weights,
                 std::vector<LstmCellCache>* caches) {
  weights.validate();
  check_direction(d, weights);
  const std::size_t batch = grid_batch(grid);
  const std::size_t hid = weights.hidden();
  LstmState state{Tensor({batch, hid}), Tensor({batch, hid})};
  const std::size_t steps = sweep_steps(d);
  if (caches) caches->resize(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    state = lstm_cell(sweep_step_input(grid, d, t), state.h, state.c, weights,
                      caches ? &(*caches)[t] : nullptr);
  }
  if (grid.rank() == 2) return state.h.reshaped({hid});
  return std::move(state.h);
}

}  // namespace

Tensor directional_sweep(const Tensor& grid, Direction d, const LstmWeights& weights) {
  return run_sweep(grid, d, weights, nullptr);
}

// ---- Tape versions ----------------------------------------------------------

LstmStateVars lstm_cell(Var x, Var h_prev, Var c_prev, const LstmVars& weights) {
  LstmWeights w{weights.w.value(), weights.u.value(), weights.b.value()};
  LstmCellCache cache;
  LstmState s = lstm_cell(x.value(), h_prev.value(), c_prev.value(), w, &cache);
  const std::size_t hid = w.hidden();
  const std::size_t rows = cache.x.dim(0);
  const Shape state_shape = s.h.shape();

  // Both outputs packed side by side [B x 2H], then split.
  Tensor packed({rows, 2 * hid});
  as_mat(packed).leftCols(hid) = as_mat(s.h, rows, hid);
  as_mat(packed).rightCols(hid) = as_mat(s.c, rows, hid);
  Tape& tape = x.tape();
  Var both = tape.record(
      std::move(packed), {x, h_prev, c_prev, weights.w, weights.u, weights.b},
      [x, h_prev, c_prev, weights, cache = std::move(cache), hid, rows](
          Tape& t, const Tensor& g) {
        LstmWeights w{weights.w.value(), weights.u.value(), weights.b.value()};
        Tensor dh({rows, hid});
        Tensor dc({rows, hid});
        as_mat(dh) = as_mat(g).leftCols(hid);
        as_mat(dc) = as_mat(g).rightCols(hid);
        LstmWeights dw = LstmWeights::zeros(hid, w.input());
        LstmCellGrads grads = lstm_cell_backward(cache, dh, dc, w, dw);
        auto add_into = [&t](Var v, const Tensor& src) {
          if (v.requires_grad()) as_vec(t.accumulate(v.id())) += as_vec(src);
        };
        add_into(x, grads.dx);
        add_into(h_prev, grads.dh_prev);
        add_into(c_prev, grads.dc_prev);
        add_into(weights.w, dw.w);
        add_into(weights.u, dw.u);
        add_into(weights.b, dw.b);
      });
  Var h = slice_cols(both, 0, hid);
  Var c = slice_cols(both, hid, 2 * hid);
  if (state_shape.size() == 1) {
    h = reshape(h, state_shape);
    c = reshape(c, state_shape);
  }
  return {h, c};
}

Var directional_sweep(Var grid, Direction d, const LstmVars& weights) {
  LstmWeights w{weights.w.value(), weights.u.value(), weights.b.value()};
  std::vector<LstmCellCache> caches;
  Tensor out = run_sweep(grid.value(), d, w, &caches);
  return grid.tape().record(
      std::move(out), {grid, weights.w, weights.u, weights.b},
      [grid, d, weights, caches = std::move(caches)](Tape& t, const Tensor& g) {
        LstmWeights w{weights.w.value(), weights.u.value(), weights.b.value()};
        const std::size_t hid = w.hidden();
        const std::size_t batch = caches.front().x.dim(0);
        LstmWeights dw = LstmWeights::zeros(hid, w.input());
        Tensor dgrid(grid.value().shape());
        Tensor dh = g.reshaped({batch, hid});
        Tensor dc({batch, hid});
        for (std::size_t step = caches.size(); step-- > 0;) {
          LstmCellGrads grads = lstm_cell_backward(caches[step], dh, dc, w, dw);
          if (grid.requires_grad()) scatter_step_grad(dgrid, d, step, grads.dx);
          dh = std::move(grads.dh_prev);
          dc = std::move(grads.dc_prev);
        }
        if (grid.requires_grad()) as_vec(t.accumulate(grid.id())) += as_vec(dgrid);
        if (weights.w.requires_grad()) as_vec(t.accumulate(weights.w.id())) += as_vec(dw.w);
        if (weights.u.requires_grad()) as_vec(t.accumulate(weights.u.id())) += as_vec(dw.u);
        if (weights.b.requires_grad()) as_vec(t.accumulate(weights.b.id())) += as_vec(dw.b);
      });
}

}  // namespace posereg
