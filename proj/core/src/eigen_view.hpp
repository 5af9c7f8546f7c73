// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "posereg/tensor.hpp"

namespace posereg::detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;

inline MatMap as_mat(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatMap(t.data().data(), static_cast<Eigen::Index>(rows),
                static_cast<Eigen::Index>(cols));
}
inline ConstMatMap as_mat(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap(t.data().data(), static_cast<Eigen::Index>(rows),
                     static_cast<Eigen::Index>(cols));
}
inline MatMap as_mat(Tensor& t) { return as_mat(t, t.dim(0), t.dim(1)); }
inline ConstMatMap as_mat(const Tensor& t) { return as_mat(t, t.dim(0), t.dim(1)); }

inline VecMap as_vec(Tensor& t) {
  return VecMap(t.data().data(), static_cast<Eigen::Index>(t.numel()));
}
inline ConstVecMap as_vec(const Tensor& t) {
  return ConstVecMap(t.data().data(), static_cast<Eigen::Index>(t.numel()));
}

}  // namespace posereg::detail
