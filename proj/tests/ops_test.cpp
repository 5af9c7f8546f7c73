// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "posereg/conv.hpp"
#include "posereg/errors.hpp"
#include "posereg/gradcheck.hpp"
#include "posereg/ops.hpp"
#include "posereg/params.hpp"

namespace posereg {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = u(rng);
  return t;
}

oracle::Mat to_mat(const Tensor& t) {
  oracle::Mat m(t.dim(0), std::vector<double>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m[i][j] = t.at(i, j);
  return m;
}

// Checks the tape gradient of `f(vars...)` (a scalar) by central differences.
double grad_error(std::vector<Tensor> inputs, const std::function<Var(std::vector<Var>&)>& f) {
  ParamSet ps;
  for (std::size_t i = 0; i < inputs.size(); ++i) ps.add("x" + std::to_string(i), inputs[i], false);
  auto objective = [&](const ParamSet& p, std::vector<Tensor>* grads) {
    Tape tape;
    auto bound = p.bind(tape);
    Var y = f(bound);
    const double v = y.value().item();
    if (grads) {
      tape.backward(y);
      *grads = ParamSet::gradients(tape, bound);
    }
    return v;
  };
  GradCheckOptions opts;
  opts.min_coords = 64;
  return finite_diff_check(objective, ps, opts).max_rel_err;
}

TEST(MatmulTest, MatchesTripleLoopOracle) {
  Rng rng(1);
  for (std::size_t trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<std::size_t> d(1, 17);
    const std::size_t n = d(rng), k = d(rng), m = d(rng);
    const Tensor a = random_tensor({n, k}, rng), b = random_tensor({k, m}, rng);
    const Tensor c = matmul(a, b);
    const auto ref = oracle::matmul(to_mat(a), to_mat(b));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) EXPECT_NEAR(c.at(i, j), ref[i][j], 1e-12);
  }
}

TEST(SigmoidTest, MatchesScalarFormulaAndSaturatesCleanly) {
  const Tensor x = Tensor::row({-800.0, -30.0, -1.0, 0.0, 0.5, 30.0, 800.0});
  const Tensor y = sigmoid(x);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (std::abs(x[i]) < 100) {
      EXPECT_NEAR(y[i], oracle::sigmoid(x[i]), 1e-15);
    }
    EXPECT_TRUE(std::isfinite(y[i]));
  }
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[6], 1.0);
  EXPECT_EQ(y[3], 0.5);
}

TEST(GridTest, FoldIsRowMajorAndUnfoldInverts) {
  Tensor v({kGridSize});
  for (std::size_t i = 0; i < kGridSize; ++i) v[i] = static_cast<double>(i);
  const Tensor g = grid_fold(v);
  ASSERT_EQ(g.shape(), (Shape{kGridRows, kGridCols}));
  EXPECT_EQ(g.at(0, 63), 63.0);
  EXPECT_EQ(g.at(1, 0), 64.0);
  EXPECT_EQ(g.at(31, 63), 2047.0);
  EXPECT_EQ(grid_unfold(g), v);
  EXPECT_THROW(grid_fold(Tensor({2047})), DimensionError);
}

TEST(GridTest, BatchedFold) {
  Rng rng(3);
  const Tensor v = random_tensor({2, kGridSize}, rng);
  const Tensor g = grid_fold(v);
  ASSERT_EQ(g.shape(), (Shape{2, kGridRows, kGridCols}));
  EXPECT_EQ(g.storage(), v.storage());
}

TEST(OpsGradTest, ElementwiseAndReductions) {
  Rng rng(4);
  const Tensor a = random_tensor({3, 5}, rng), b = random_tensor({3, 5}, rng);
  EXPECT_LT(grad_error({a, b}, [](auto& x) { return sum(mul(tanh(x[0]), sigmoid(x[1]))); }), 1e-7);
  EXPECT_LT(grad_error({a, b}, [](auto& x) { return mean(sub(x[0], scale(x[1], 3.0))); }), 1e-7);
  EXPECT_LT(grad_error({a}, [](auto& x) { return sum_squares(relu(x[0])); }), 1e-6);
}

TEST(OpsGradTest, MatmulFcAndBias) {
  Rng rng(5);
  const Tensor x = random_tensor({4, 6}, rng), w = random_tensor({3, 6}, rng),
               b = random_tensor({3}, rng), m = random_tensor({6, 2}, rng);
  EXPECT_LT(grad_error({x, w, b}, [](auto& v) { return sum_squares(fc(v[0], v[1], v[2])); }), 1e-7);
  EXPECT_LT(grad_error({x, m}, [](auto& v) { return sum(tanh(matmul(v[0], v[1]))); }), 1e-7);
  const Tensor bias = random_tensor({6}, rng);
  EXPECT_LT(grad_error({x, bias}, [](auto& v) { return sum_squares(add_bias(v[0], v[1])); }), 1e-7);
}

TEST(OpsGradTest, ConcatSliceReshape) {
  Rng rng(6);
  const Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 4}, rng);
  EXPECT_LT(grad_error({a, b},
                       [](auto& v) {
                         std::vector<Var> parts{v[0], v[1]};
                         Var c = concat(parts);
                         return sum_squares(slice_cols(reshape(c, {2, 7}), 2, 6));
                       }),
            1e-7);
}

TEST(ConcatTest, EmptyListIsUsageError) {
  EXPECT_THROW(concat(std::span<const Var>{}), UsageError);
}

TEST(DropoutTest, EvalModeAndZeroRateAreIdentity) {
  Rng rng(7);
  Tape tape;
  Var x = tape.variable(random_tensor({4, 8}, rng));
  EXPECT_EQ(dropout(x, 0.5, rng, Mode::eval).value(), x.value());
  EXPECT_EQ(dropout(x, 0.0, rng, Mode::train).value(), x.value());
  EXPECT_THROW(dropout(x, 1.0, rng, Mode::train), UsageError);
}

TEST(DropoutTest, TrainModeIsInvertedAndSeeded) {
  Tape tape;
  Var x = tape.constant(Tensor({1, 20000}, 1.0));
  Rng r1(9), r2(9);
  const Tensor y1 = dropout(x, 0.25, r1, Mode::train).value();
  const Tensor y2 = dropout(x, 0.25, r2, Mode::train).value();
  EXPECT_EQ(y1, y2);
  double total = 0.0;
  for (double v : y1.data()) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-15);
    total += v;
  }
  EXPECT_NEAR(total / 20000.0, 1.0, 0.02);
}

TEST(ConvTest, MatchesDirectConvolution) {
  Rng rng(10);
  const Tensor x = random_tensor({2, 3, 6, 5}, rng), w = random_tensor({4, 3, 3, 3}, rng),
               b = random_tensor({4}, rng);
  for (std::size_t stride : {1u, 2u}) {
    Tape tape;
    const ConvGeometry geo{stride, 1};
    const Tensor y = conv2d(tape.constant(x), tape.constant(w), tape.constant(b), geo).value();
    const std::size_t oh = conv_out_extent(6, 3, geo), ow = conv_out_extent(5, 3, geo);
    ASSERT_EQ(y.shape(), (Shape{2, 4, oh, ow}));
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t o = 0; o < 4; ++o)
        for (std::size_t i = 0; i < oh; ++i)
          for (std::size_t j = 0; j < ow; ++j) {
            double s = b[o];
            for (std::size_t c = 0; c < 3; ++c)
              for (std::size_t ki = 0; ki < 3; ++ki)
                for (std::size_t kj = 0; kj < 3; ++kj) {
                  const long yy = static_cast<long>(i * stride + ki) - 1;
                  const long xx = static_cast<long>(j * stride + kj) - 1;
                  if (yy < 0 || xx < 0 || yy >= 6 || xx >= 5) continue;
                  s += w[((o * 3 + c) * 3 + ki) * 3 + kj] * x[((n * 3 + c) * 6 + yy) * 5 + xx];
                }
            EXPECT_NEAR(y[((n * 4 + o) * oh + i) * ow + j], s, 1e-12);
          }
  }
}

TEST(ConvTest, GradientsMatchFiniteDifferences) {
  Rng rng(11);
  const Tensor x = random_tensor({2, 2, 5, 5}, rng), w = random_tensor({3, 2, 3, 3}, rng),
               b = random_tensor({3}, rng);
  EXPECT_LT(grad_error({x, w, b},
                       [](auto& v) {
                         return sum_squares(spatial_mean(conv2d(v[0], v[1], v[2], {2, 1})));
                       }),
            1e-7);
}

}  // namespace
}  // namespace posereg
