#include <algorithm>

#include "genias/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace genias {

int kernel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_kernel_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

namespace kernels {

namespace {

// Valid output range [lo, hi) for an input offset `off` (input index = out index + off).
inline void valid_range(int off, int in_len, int out_len, int& lo, int& hi) {
  lo = std::max(0, -off);
  hi = std::min(out_len, in_len - off);
}

// Input range [lo, hi) whose taps o = i * stride + k - padding land inside [0, tout).
inline void tconv_range(int k, const TConvGeom& g, int tin, int tout, int& lo, int& hi) {
  const int base = k - g.padding;
  lo = base >= 0 ? 0 : (-base + g.stride - 1) / g.stride;
  const int top = tout - 1 - base;
  hi = top < 0 ? 0 : std::min(tin, top / g.stride + 1);
}

}  // namespace

void conv1d_forward(const Tensor3& x, std::span<const double> w, std::span<const double> b,
                    const ConvGeom& g, Tensor3& y) {
  const int tout = g.out_length(x.t);
  y = Tensor3(x.n, g.out_channels, tout);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < x.n; ++n)
    for (int co = 0; co < g.out_channels; ++co) {
      double* yr = &y(n, co, 0);
      std::fill(yr, yr + tout, b[co]);
      for (int ci = 0; ci < g.in_channels; ++ci) {
        const double* xr = &x.v[x.index(n, ci, 0)];
        for (int k = 0; k < g.kernel; ++k) {
          const double wv = w[(co * g.in_channels + ci) * g.kernel + k];
          const int off = k * g.dilation - g.pad_left;
          int lo, hi;
          valid_range(off, x.t, tout, lo, hi);
          for (int t = lo; t < hi; ++t) yr[t] += wv * xr[t + off];
        }
      }
    }
}

void conv1d_backward(const Tensor3& x, std::span<const double> w, const Tensor3& gy,
                     const ConvGeom& g, Tensor3* gx, std::span<double> gw, std::span<double> gb) {
  const int tout = gy.t;
#pragma omp parallel for schedule(static)
  for (int co = 0; co < g.out_channels; ++co) {
    for (int n = 0; n < x.n; ++n) {
      const double* gr = &gy.v[gy.index(n, co, 0)];
      double s = 0.0;
      for (int t = 0; t < tout; ++t) s += gr[t];
      gb[co] += s;
      for (int ci = 0; ci < g.in_channels; ++ci) {
        const double* xr = &x.v[x.index(n, ci, 0)];
        for (int k = 0; k < g.kernel; ++k) {
          const int off = k * g.dilation - g.pad_left;
          int lo, hi;
          valid_range(off, x.t, tout, lo, hi);
          double acc = 0.0;
          for (int t = lo; t < hi; ++t) acc += gr[t] * xr[t + off];
          gw[(co * g.in_channels + ci) * g.kernel + k] += acc;
        }
      }
    }
  }
  if (!gx) return;
  *gx = Tensor3(x.n, x.c, x.t);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < x.n; ++n)
    for (int ci = 0; ci < g.in_channels; ++ci) {
      double* gxr = &(*gx)(n, ci, 0);
      for (int co = 0; co < g.out_channels; ++co) {
        const double* gr = &gy.v[gy.index(n, co, 0)];
        for (int k = 0; k < g.kernel; ++k) {
          const double wv = w[(co * g.in_channels + ci) * g.kernel + k];
          const int off = k * g.dilation - g.pad_left;
          int lo, hi;
          valid_range(off, x.t, tout, lo, hi);
          for (int t = lo; t < hi; ++t) gxr[t + off] += wv * gr[t];
        }
      }
    }
}

void tconv1d_forward(const Tensor3& x, std::span<const double> w, std::span<const double> b,
                     const TConvGeom& g, Tensor3& y) {
  const int tout = g.out_length(x.t);
  y = Tensor3(x.n, g.out_channels, tout);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < x.n; ++n)
    for (int co = 0; co < g.out_channels; ++co) {
      double* yr = &y(n, co, 0);
      std::fill(yr, yr + tout, b[co]);
      for (int ci = 0; ci < g.in_channels; ++ci) {
        const double* xr = &x.v[x.index(n, ci, 0)];
        for (int k = 0; k < g.kernel; ++k) {
          const double wv = w[(ci * g.out_channels + co) * g.kernel + k];
          const int base = k - g.padding;
          int lo, hi;
          tconv_range(k, g, x.t, tout, lo, hi);
          for (int i = lo; i < hi; ++i) yr[i * g.stride + base] += xr[i] * wv;
        }
      }
    }
}

void tconv1d_backward(const Tensor3& x, std::span<const double> w, const Tensor3& gy,
                      const TConvGeom& g, Tensor3* gx, std::span<double> gw,
                      std::span<double> gb) {
  const int tout = gy.t;
#pragma omp parallel for schedule(static)
  for (int co = 0; co < g.out_channels; ++co)
    for (int n = 0; n < gy.n; ++n) {
      const double* gr = &gy.v[gy.index(n, co, 0)];
      double s = 0.0;
      for (int o = 0; o < tout; ++o) s += gr[o];
      gb[co] += s;
    }
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < g.in_channels; ++ci)
    for (int n = 0; n < x.n; ++n) {
      const double* xr = &x.v[x.index(n, ci, 0)];
      for (int co = 0; co < g.out_channels; ++co) {
        const double* gr = &gy.v[gy.index(n, co, 0)];
        for (int k = 0; k < g.kernel; ++k) {
          const int base = k - g.padding;
          int lo, hi;
          tconv_range(k, g, x.t, tout, lo, hi);
          double acc = 0.0;
          for (int i = lo; i < hi; ++i) acc += xr[i] * gr[i * g.stride + base];
          gw[(ci * g.out_channels + co) * g.kernel + k] += acc;
        }
      }
    }
  if (!gx) return;
  *gx = Tensor3(x.n, x.c, x.t);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < x.n; ++n)
    for (int ci = 0; ci < g.in_channels; ++ci) {
      double* gxr = &(*gx)(n, ci, 0);
      for (int co = 0; co < g.out_channels; ++co) {
        const double* gr = &gy.v[gy.index(n, co, 0)];
        for (int k = 0; k < g.kernel; ++k) {
          const double wv = w[(ci * g.out_channels + co) * g.kernel + k];
          const int base = k - g.padding;
          int lo, hi;
          tconv_range(k, g, x.t, tout, lo, hi);
          for (int i = lo; i < hi; ++i) gxr[i] += wv * gr[i * g.stride + base];
        }
      }
    }
}

void linear_forward(const Tensor3& x, std::span<const double> w, std::span<const double> b,
                    int out_features, Tensor3& y) {
  const auto in = static_cast<std::ptrdiff_t>(x.sample_size());
  y = Tensor3(x.n, out_features, 1);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < out_features; ++o) {
      const double* xs = x.v.data() + n * in;
      const double* wr = w.data() + o * in;
      double acc = 0.0;
      for (std::ptrdiff_t i = 0; i < in; ++i) acc += wr[i] * xs[i];
      y(n, o, 0) = acc + b[o];
    }
}

void linear_backward(const Tensor3& x, std::span<const double> w, const Tensor3& gy, Tensor3* gx,
                     std::span<double> gw, std::span<double> gb) {
  const auto in = static_cast<std::ptrdiff_t>(x.sample_size());
  const int out = gy.c;
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out; ++o) {
    double* gwr = gw.data() + o * in;
    for (int n = 0; n < x.n; ++n) {
      const double go = gy(n, o, 0);
      gb[o] += go;
      const double* xs = x.v.data() + n * in;
      for (std::ptrdiff_t i = 0; i < in; ++i) gwr[i] += go * xs[i];
    }
  }
  if (!gx) return;
  *gx = Tensor3(x.n, x.c, x.t);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < x.n; ++n) {
    double* gxs = gx->v.data() + n * in;
    for (int o = 0; o < out; ++o) {
      const double go = gy(n, o, 0);
      const double* wr = w.data() + o * in;
      for (std::ptrdiff_t i = 0; i < in; ++i) gxs[i] += go * wr[i];
    }
  }
}

}  // namespace kernels
}  // namespace genias
