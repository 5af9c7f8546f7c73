// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "posereg/errors.hpp"
#include "posereg/ops.hpp"
#include "posereg/tape.hpp"
#include "posereg/tensor.hpp"

namespace posereg {
namespace {

TEST(TensorTest, ShapeAndFill) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.dim(1), 3u);
  for (double v : t.data()) EXPECT_EQ(v, 1.5);
}

TEST(TensorTest, RejectsZeroExtentAndSizeMismatch) {
  EXPECT_THROW(Tensor({0, 3}), DimensionError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(TensorTest, MatrixFactoryIsRowMajor) {
  const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.at(1, 0), 4.0);
  EXPECT_EQ(m[2], 3.0);
}

TEST(TensorTest, ReshapeKeepsDataAndChecksCount) {
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  const Tensor r = m.reshaped({4});
  EXPECT_EQ(r.storage(), m.storage());
  EXPECT_THROW(m.reshaped({3}), DimensionError);
}

TEST(TensorTest, ItemRequiresSingleElement) {
  EXPECT_EQ(Tensor::scalar(2.5).item(), 2.5);
  EXPECT_THROW(Tensor({2}).item(), DimensionError);
}

TEST(TensorTest, AllFinite) {
  Tensor t({3}, 0.0);
  EXPECT_TRUE(t.all_finite());
  t[1] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(TapeTest, ConstantsCarryNoGradient) {
  Tape tape;
  Var c = tape.constant(Tensor::row({1, 2}));
  Var v = tape.variable(Tensor::row({3, 4}));
  EXPECT_FALSE(c.requires_grad());
  EXPECT_TRUE(v.requires_grad());
  Var y = sum(mul(c, v));
  tape.backward(y);
  EXPECT_EQ(tape.grad(v), Tensor::row({1, 2}));
  EXPECT_EQ(tape.grad(c), Tensor::row({0, 0}));
}

TEST(TapeTest, GradientAccumulatesOverFanOut) {
  Tape tape;
  Var x = tape.variable(Tensor::scalar(3.0));
  // y = x*x + x  -> dy/dx = 2x + 1
  Var y = add(mul(x, x), x);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(tape.grad(x).item(), 7.0);
}

TEST(TapeTest, BackwardVisitsOpsInReverseRecordingOrder) {
  Tape tape;
  Var x = tape.variable(Tensor::row({1, -2, 3}));
  Var a = tanh(x);
  Var b = scale(a, 2.0);
  Var y = sum(b);
  tape.backward(y);
  const auto& order = tape.last_backward_order();
  ASSERT_EQ(order.size(), 3u);
  EXPECT_EQ(order[0], y.id());
  EXPECT_EQ(order[1], b.id());
  EXPECT_EQ(order[2], a.id());
}

TEST(TapeTest, BackwardRequiresScalarAndRunsOnce) {
  Tape tape;
  Var x = tape.variable(Tensor::row({1, 2}));
  EXPECT_THROW(tape.backward(scale(x, 1.0)), DimensionError);
  Var y = sum(x);
  tape.backward(y);
  EXPECT_THROW(tape.backward(y), UsageError);
}

TEST(TapeTest, ShapeMismatchIsADimensionError) {
  Tape tape;
  Var a = tape.variable(Tensor({2}));
  Var b = tape.variable(Tensor({3}));
  EXPECT_THROW(add(a, b), DimensionError);
  EXPECT_THROW(matmul(tape.variable(Tensor({2, 3})), tape.variable(Tensor({2, 3}))),
               DimensionError);
}

}  // namespace
}  // namespace posereg
