// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/ops.hpp"

#include <cmath>
#include <string>

#include "eigen_view.hpp"
#include "posereg/errors.hpp"

namespace posereg {

using detail::as_mat;
using detail::as_vec;

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + ", got " + to_string(t.shape()));
  }
}

double sigmoid_scalar(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---- Plain kernels --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions differ, " +
                         to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  Tensor c({a.dim(0), b.dim(1)});
  as_mat(c).noalias() = as_mat(a) * as_mat(b);
  return c;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = sigmoid_scalar(v);
  return y;
}

Tensor tanh(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = std::tanh(v);
  return y;
}

Tensor grid_fold(const Tensor& v) {
  if (v.rank() == 1 && v.dim(0) == kGridSize) {
    return v.reshaped({kGridRows, kGridCols});
  }
  if (v.rank() == 2 && v.dim(1) == kGridSize) {
    return v.reshaped({v.dim(0), kGridRows, kGridCols});
  }
  throw DimensionError("grid_fold: expected length " +
                       std::to_string(kGridSize) + ", got " +
                       to_string(v.shape()));
}

Tensor grid_unfold(const Tensor& grid) {
  if (grid.rank() == 2 && grid.dim(0) == kGridRows && grid.dim(1) == kGridCols) {
    return grid.reshaped({kGridSize});
  }
  if (grid.rank() == 3 && grid.dim(1) == kGridRows && grid.dim(2) == kGridCols) {
    return grid.reshaped({grid.dim(0), kGridSize});
  }
  throw DimensionError("grid_unfold: expected a 32x64 grid, got " +
                       to_string(grid.shape()));
}

// ---- Tape ops -------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& tape = a.tape();
  Tensor out = matmul(a.value(), b.value());
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (a.requires_grad()) {
      as_mat(t.accumulate(a.id())).noalias() +=
          as_mat(g) * as_mat(b.value()).transpose();
    }
    if (b.requires_grad()) {
      as_mat(t.accumulate(b.id())).noalias() +=
          as_mat(a.value()).transpose() * as_mat(g);
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  as_vec(out) += as_vec(b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (a.requires_grad()) as_vec(t.accumulate(a.id())) += as_vec(g);
    if (b.requires_grad()) as_vec(t.accumulate(b.id())) += as_vec(g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  as_vec(out) -= as_vec(b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (a.requires_grad()) as_vec(t.accumulate(a.id())) += as_vec(g);
    if (b.requires_grad()) as_vec(t.accumulate(b.id())) -= as_vec(g);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  as_vec(out).array() *= as_vec(b.value()).array();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (a.requires_grad()) {
      as_vec(t.accumulate(a.id())).array() +=
          as_vec(g).array() * as_vec(b.value()).array();
    }
    if (b.requires_grad()) {
      as_vec(t.accumulate(b.id())).array() +=
          as_vec(g).array() * as_vec(a.value()).array();
    }
  });
}

Var scale(Var x, double s) {
  Tensor out = x.value();
  as_vec(out) *= s;
  return x.tape().record(std::move(out), {x}, [x, s](Tape& t, const Tensor& g) {
    as_vec(t.accumulate(x.id())) += s * as_vec(g);
  });
}

Var sigmoid(Var x) {
  Tensor out = sigmoid(x.value());
  Tensor saved = out;
  return x.tape().record(
      std::move(out), {x}, [x, saved = std::move(saved)](Tape& t, const Tensor& g) {
        const auto s = as_vec(saved).array();
        as_vec(t.accumulate(x.id())).array() += as_vec(g).array() * s * (1.0 - s);
      });
}

Var tanh(Var x) {
  Tensor out = tanh(x.value());
  Tensor saved = out;
  return x.tape().record(
      std::move(out), {x}, [x, saved = std::move(saved)](Tape& t, const Tensor& g) {
        const auto th = as_vec(saved).array();
        as_vec(t.accumulate(x.id())).array() +=
            as_vec(g).array() * (1.0 - th * th);
      });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    Tensor& gx = t.accumulate(x.id());
    const Tensor& in = x.value();
    for (std::size_t i = 0; i < g.numel(); ++i) {
      if (in[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var add_bias(Var x, Var b) {
  const Tensor& xv = x.value();
  require_rank(xv, 2, "add_bias");
  if (b.value().numel() != xv.dim(1)) {
    throw DimensionError("add_bias: bias " + to_string(b.shape()) +
                         " does not match " + to_string(xv.shape()));
  }
  Tensor out = xv;
  as_mat(out).rowwise() += as_vec(b.value());
  return x.tape().record(std::move(out), {x, b}, [x, b](Tape& t, const Tensor& g) {
    if (x.requires_grad()) as_vec(t.accumulate(x.id())) += as_vec(g);
    if (b.requires_grad()) {
      as_vec(t.accumulate(b.id())) += as_mat(g).colwise().sum();
    }
  });
}

Var fc(Var x, Var w, Var b) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  require_rank(xv, 2, "fc");
  require_rank(wv, 2, "fc");
  if (wv.dim(1) != xv.dim(1) || b.value().numel() != wv.dim(0)) {
    throw DimensionError("fc: input " + to_string(xv.shape()) + ", weight " +
                         to_string(wv.shape()) + ", bias " +
                         to_string(b.shape()) + " are inconsistent");
  }
  Tensor out({xv.dim(0), wv.dim(0)});
  auto y = as_mat(out);
  y.noalias() = as_mat(xv) * as_mat(wv).transpose();
  y.rowwise() += as_vec(b.value());
  return x.tape().record(std::move(out), {x, w, b}, [x, w, b](Tape& t, const Tensor& g) {
    const auto gm = as_mat(g);
    if (x.requires_grad()) {
      as_mat(t.accumulate(x.id())).noalias() += gm * as_mat(w.value());
    }
    if (w.requires_grad()) {
      as_mat(t.accumulate(w.id())).noalias() += gm.transpose() * as_mat(x.value());
    }
    if (b.requires_grad()) as_vec(t.accumulate(b.id())) += gm.colwise().sum();
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat: empty part list");
  const std::size_t rank = parts[0].value().rank();
  if (rank != 1 && rank != 2) {
    throw DimensionError("concat: parts must be rank 1 or 2, got " +
                         to_string(parts[0].shape()));
  }
  const std::size_t rows = rank == 1 ? 1 : parts[0].value().dim(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (v.rank() != rank || (rank == 2 && v.dim(0) != rows)) {
      throw DimensionError("concat: incompatible part " + to_string(v.shape()) +
                           " after " + to_string(parts[0].shape()));
    }
    widths.push_back(v.numel() / rows);
    total += widths.back();
  }
  Tensor out(rank == 1 ? Shape{total} : Shape{rows, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    as_mat(out, rows, total).middleCols(offset, widths[k]) =
        as_mat(parts[k].value(), rows, widths[k]);
    offset += widths[k];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().record(
      std::move(out), inputs,
      [inputs, widths, rows, total](Tape& t, const Tensor& g) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
          if (inputs[k].requires_grad()) {
            as_mat(t.accumulate(inputs[k].id()), rows, widths[k]) +=
                as_mat(g, rows, total).middleCols(off, widths[k]);
          }
          off += widths[k];
        }
      });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  require_rank(xv, 2, "slice_cols");
  if (begin >= end || end > xv.dim(1)) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") invalid for " +
                         to_string(xv.shape()));
  }
  const std::size_t rows = xv.dim(0);
  const std::size_t width = end - begin;
  Tensor out({rows, width});
  as_mat(out) = as_mat(xv).middleCols(begin, width);
  return x.tape().record(std::move(out), {x}, [x, begin, width](Tape& t, const Tensor& g) {
    as_mat(t.accumulate(x.id())).middleCols(begin, width) += as_mat(g);
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    as_vec(t.accumulate(x.id())) += as_vec(g);
  });
}

Var grid_fold(Var v) {
  Tensor out = grid_fold(v.value());
  return v.tape().record(std::move(out), {v}, [v](Tape& t, const Tensor& g) {
    as_vec(t.accumulate(v.id())) += as_vec(g);
  });
}

Var grid_unfold(Var grid) {
  Tensor out = grid_unfold(grid.value());
  return grid.tape().record(std::move(out), {grid}, [grid](Tape& t, const Tensor& g) {
    as_vec(t.accumulate(grid.id())) += as_vec(g);
  });
}

Var sum(Var x) {
  Tensor out = Tensor::scalar(as_vec(x.value()).sum());
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    as_vec(t.accumulate(x.id())).array() += g[0];
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().numel());
  Tensor out = Tensor::scalar(as_vec(x.value()).sum() / n);
  return x.tape().record(std::move(out), {x}, [x, n](Tape& t, const Tensor& g) {
    as_vec(t.accumulate(x.id())).array() += g[0] / n;
  });
}

Var sum_squares(Var x) {
  Tensor out = Tensor::scalar(as_vec(x.value()).squaredNorm());
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    as_vec(t.accumulate(x.id())) += (2.0 * g[0]) * as_vec(x.value());
  });
}

Var dropout(Var x, double rate, Rng& rng, Mode mode) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw UsageError("dropout: rate must be in [0,1), got " + std::to_string(rate));
  }
  if (mode == Mode::eval || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const double inv = 1.0 / (1.0 - rate);
  Tensor mask(x.shape());
  for (double& m : mask.data()) m = keep(rng) ? inv : 0.0;
  Tensor out = x.value();
  as_vec(out).array() *= as_vec(mask).array();
  return x.tape().record(
      std::move(out), {x}, [x, mask = std::move(mask)](Tape& t, const Tensor& g) {
        as_vec(t.accumulate(x.id())).array() +=
            as_vec(g).array() * as_vec(mask).array();
      });
}

}  // namespace posereg
