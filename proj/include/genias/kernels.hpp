#pragma once

#include <span>

#include "genias/tensor.hpp"

// Forward and backward kernels for the network layers. Two implementations share
// these signatures: `kernels::serial` is the plain loop reference kept for testing,
// `kernels` is the OpenMP version used by the library. Every parallel loop owns a
// disjoint slice of its output and reduces in a fixed order, so the OpenMP results
// are bitwise identical for any thread count. The serial loops sum in a different
// order and agree with them to rounding.
//
// Backward kernels accumulate into the weight/bias gradients and overwrite the
// input gradient.

namespace genias {

/// Stride-1 dilated convolution. Output length = t + pad_left + pad_right - dilation*(k-1).
struct ConvGeom {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int dilation = 1;
  int pad_left = 0;
  int pad_right = 0;

  int out_length(int t) const { return t + pad_left + pad_right - dilation * (kernel - 1); }
  static ConvGeom causal(int cin, int cout, int k, int dilation) {
    return {cin, cout, k, dilation, dilation * (k - 1), 0};
  }
};

/// Transposed convolution. Output length = (t-1)*stride - 2*padding + kernel + output_padding.
struct TConvGeom {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int padding = 0;
  int output_padding = 0;

  int out_length(int t) const { return (t - 1) * stride - 2 * padding + kernel + output_padding; }
};

// Weight layouts: conv (cout, cin, k); tconv (cin, cout, k); linear (out, in).
// Linear treats each sample's (c * t) values as its feature vector.

#define GENIAS_KERNEL_DECLS                                                                     \
  void conv1d_forward(const Tensor3& x, std::span<const double> w, std::span<const double> b,  \
                      const ConvGeom& g, Tensor3& y);                                          \
  void conv1d_backward(const Tensor3& x, std::span<const double> w, const Tensor3& gy,         \
                       const ConvGeom& g, Tensor3* gx, std::span<double> gw,                   \
                       std::span<double> gb);                                                  \
  void tconv1d_forward(const Tensor3& x, std::span<const double> w, std::span<const double> b, \
                       const TConvGeom& g, Tensor3& y);                                        \
  void tconv1d_backward(const Tensor3& x, std::span<const double> w, const Tensor3& gy,        \
                        const TConvGeom& g, Tensor3* gx, std::span<double> gw,                 \
                        std::span<double> gb);                                                 \
  void linear_forward(const Tensor3& x, std::span<const double> w, std::span<const double> b,  \
                      int out_features, Tensor3& y);                                           \
  void linear_backward(const Tensor3& x, std::span<const double> w, const Tensor3& gy,         \
                       Tensor3* gx, std::span<double> gw, std::span<double> gb);

namespace kernels {
GENIAS_KERNEL_DECLS
namespace serial {
GENIAS_KERNEL_DECLS
}  // namespace serial
}  // namespace kernels

#undef GENIAS_KERNEL_DECLS

/// Number of worker threads the OpenMP kernels use (1 when built without OpenMP).
int kernel_threads();
void set_kernel_threads(int n);

}  // namespace genias
