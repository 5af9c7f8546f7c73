// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/conv.hpp"

#include <string>

#include "eigen_view.hpp"
#include "posereg/errors.hpp"

namespace posereg {

using detail::as_mat;
using detail::as_vec;

namespace {

struct ConvDims {
  std::size_t batch, channels, height, width;
  std::size_t out_channels, kernel;
  std::size_t out_h, out_w;
  ConvGeometry geo;

  std::size_t patch() const { return channels * kernel * kernel; }
  std::size_t positions() const { return batch * out_h * out_w; }
};

// Patch matrix [B*H'*W' x C*k*k]; padded taps stay zero.
Tensor im2col(const Tensor& x, const ConvDims& d) {
  Tensor cols({d.positions(), d.patch()});
  const double* src = x.data().data();
  double* dst = cols.data().data();
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t oy = 0; oy < d.out_h; ++oy) {
      for (std::size_t ox = 0; ox < d.out_w; ++ox) {
        double* row = dst + ((b * d.out_h + oy) * d.out_w + ox) * d.patch();
        for (std::size_t c = 0; c < d.channels; ++c) {
          for (std::size_t ky = 0; ky < d.kernel; ++ky) {
            const long iy = static_cast<long>(oy * d.geo.stride + ky) -
                            static_cast<long>(d.geo.pad);
            for (std::size_t kx = 0; kx < d.kernel; ++kx) {
              const long ix = static_cast<long>(ox * d.geo.stride + kx) -
                              static_cast<long>(d.geo.pad);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(d.height) ||
                  ix >= static_cast<long>(d.width)) {
                continue;
              }
              row[(c * d.kernel + ky) * d.kernel + kx] =
                  src[((b * d.channels + c) * d.height + iy) * d.width + ix];
            }
          }
        }
      }
    }
  }
  return cols;
}

void col2im_add(const Tensor& dcols, const ConvDims& d, Tensor& dx) {
  const double* src = dcols.data().data();
  double* dst = dx.data().data();
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t oy = 0; oy < d.out_h; ++oy) {
      for (std::size_t ox = 0; ox < d.out_w; ++ox) {
        const double* row = src + ((b * d.out_h + oy) * d.out_w + ox) * d.patch();
        for (std::size_t c = 0; c < d.channels; ++c) {
          for (std::size_t ky = 0; ky < d.kernel; ++ky) {
            const long iy = static_cast<long>(oy * d.geo.stride + ky) -
                            static_cast<long>(d.geo.pad);
            for (std::size_t kx = 0; kx < d.kernel; ++kx) {
              const long ix = static_cast<long>(ox * d.geo.stride + kx) -
                              static_cast<long>(d.geo.pad);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(d.height) ||
                  ix >= static_cast<long>(d.width)) {
                continue;
              }
              dst[((b * d.channels + c) * d.height + iy) * d.width + ix] +=
                  row[(c * d.kernel + ky) * d.kernel + kx];
            }
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, ConvGeometry g) {
  if (g.stride == 0 || in + 2 * g.pad < kernel) {
    throw DimensionError("conv2d: kernel " + std::to_string(kernel) +
                         " does not fit input extent " + std::to_string(in));
  }
  return (in + 2 * g.pad - kernel) / g.stride + 1;
}

Var conv2d(Var x, Var w, Var b, ConvGeometry geometry) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.rank() != 4 || wv.rank() != 4 || wv.dim(1) != xv.dim(1) ||
      wv.dim(2) != wv.dim(3) || b.value().numel() != wv.dim(0)) {
    throw DimensionError("conv2d: input " + to_string(xv.shape()) + ", weight " +
                         to_string(wv.shape()) + ", bias " + to_string(b.shape()) +
                         " are inconsistent");
  }
  ConvDims d{xv.dim(0), xv.dim(1), xv.dim(2), xv.dim(3), wv.dim(0), wv.dim(2), 0, 0,
             geometry};
  d.out_h = conv_out_extent(d.height, d.kernel, geometry);
  d.out_w = conv_out_extent(d.width, d.kernel, geometry);

  Tensor cols = im2col(xv, d);
  Tensor flat({d.positions(), d.out_channels});
  as_mat(flat).noalias() = as_mat(cols) * as_mat(wv, d.out_channels, d.patch()).transpose();
  as_mat(flat).rowwise() += as_vec(b.value());

  // [B*H'*W' x O] -> [B x O x H' x W']
  const std::size_t plane = d.out_h * d.out_w;
  Tensor out({d.batch, d.out_channels, d.out_h, d.out_w});
  for (std::size_t bi = 0; bi < d.batch; ++bi) {
    for (std::size_t p = 0; p < plane; ++p) {
      for (std::size_t o = 0; o < d.out_channels; ++o) {
        out[(bi * d.out_channels + o) * plane + p] = flat[(bi * plane + p) * d.out_channels + o];
      }
    }
  }

  return x.tape().record(
      std::move(out), {x, w, b},
      [x, w, b, d, cols = std::move(cols)](Tape& t, const Tensor& g) {
        const std::size_t plane = d.out_h * d.out_w;
        Tensor gflat({d.positions(), d.out_channels});
        for (std::size_t bi = 0; bi < d.batch; ++bi) {
          for (std::size_t p = 0; p < plane; ++p) {
            for (std::size_t o = 0; o < d.out_channels; ++o) {
              gflat[(bi * plane + p) * d.out_channels + o] =
                  g[(bi * d.out_channels + o) * plane + p];
            }
          }
        }
        const auto gm = as_mat(gflat);
        if (w.requires_grad()) {
          as_mat(t.accumulate(w.id()), d.out_channels, d.patch()).noalias() +=
              gm.transpose() * as_mat(cols);
        }
        if (b.requires_grad()) as_vec(t.accumulate(b.id())) += gm.colwise().sum();
        if (x.requires_grad()) {
          Tensor dcols({d.positions(), d.patch()});
          as_mat(dcols).noalias() = gm * as_mat(w.value(), d.out_channels, d.patch());
          col2im_add(dcols, d, t.accumulate(x.id()));
        }
      });
}

Var spatial_mean(Var x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) {
    throw DimensionError("spatial_mean: expected [B x C x H x W], got " +
                         to_string(xv.shape()));
  }
  const std::size_t rows = xv.dim(0) * xv.dim(1);
  const std::size_t plane = xv.dim(2) * xv.dim(3);
  Tensor out({xv.dim(0), xv.dim(1)});
  as_vec(out) = as_mat(xv, rows, plane).rowwise().mean().transpose();
  return x.tape().record(std::move(out), {x}, [x, rows, plane](Tape& t, const Tensor& g) {
    auto gx = as_mat(t.accumulate(x.id()), rows, plane);
    const double inv = 1.0 / static_cast<double>(plane);
    for (std::size_t r = 0; r < rows; ++r) gx.row(r).array() += g[r] * inv;
  });
}

}  // namespace posereg
