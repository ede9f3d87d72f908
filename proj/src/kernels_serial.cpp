// Reference implementations: straightforward loops, no parallelism.

#include "genias/kernels.hpp"

namespace genias::kernels::serial {

void conv1d_forward(const Tensor3& x, std::span<const double> w, std::span<const double> b,
                    const ConvGeom& g, Tensor3& y) {
  const int tout = g.out_length(x.t);
  y = Tensor3(x.n, g.out_channels, tout);
  for (int n = 0; n < x.n; ++n)
    for (int co = 0; co < g.out_channels; ++co)
      for (int t = 0; t < tout; ++t) {
        double acc = b[co];
        for (int ci = 0; ci < g.in_channels; ++ci)
          for (int k = 0; k < g.kernel; ++k) {
            const int s = t + k * g.dilation - g.pad_left;
            if (s >= 0 && s < x.t) acc += w[(co * g.in_channels + ci) * g.kernel + k] * x(n, ci, s);
          }
        y(n, co, t) = acc;
      }
}

void conv1d_backward(const Tensor3& x, std::span<const double> w, const Tensor3& gy,
                     const ConvGeom& g, Tensor3* gx, std::span<double> gw, std::span<double> gb) {
  if (gx) *gx = Tensor3(x.n, x.c, x.t);
  for (int n = 0; n < x.n; ++n)
    for (int co = 0; co < g.out_channels; ++co)
      for (int t = 0; t < gy.t; ++t) {
        const double go = gy(n, co, t);
        gb[co] += go;
        for (int ci = 0; ci < g.in_channels; ++ci)
          for (int k = 0; k < g.kernel; ++k) {
            const int s = t + k * g.dilation - g.pad_left;
            if (s < 0 || s >= x.t) continue;
            const std::size_t wi = (co * g.in_channels + ci) * g.kernel + k;
            gw[wi] += go * x(n, ci, s);
            if (gx) (*gx)(n, ci, s) += go * w[wi];
          }
      }
}

void tconv1d_forward(const Tensor3& x, std::span<const double> w, std::span<const double> b,
                     const TConvGeom& g, Tensor3& y) {
  const int tout = g.out_length(x.t);
  y = Tensor3(x.n, g.out_channels, tout);
  for (int n = 0; n < x.n; ++n) {
    for (int co = 0; co < g.out_channels; ++co)
      for (int o = 0; o < tout; ++o) y(n, co, o) = b[co];
    for (int ci = 0; ci < g.in_channels; ++ci)
      for (int i = 0; i < x.t; ++i)
        for (int co = 0; co < g.out_channels; ++co)
          for (int k = 0; k < g.kernel; ++k) {
            const int o = i * g.stride + k - g.padding;
            if (o >= 0 && o < tout)
              y(n, co, o) += x(n, ci, i) * w[(ci * g.out_channels + co) * g.kernel + k];
          }
  }
}

void tconv1d_backward(const Tensor3& x, std::span<const double> w, const Tensor3& gy,
                      const TConvGeom& g, Tensor3* gx, std::span<double> gw,
                      std::span<double> gb) {
  if (gx) *gx = Tensor3(x.n, x.c, x.t);
  for (int n = 0; n < x.n; ++n) {
    for (int co = 0; co < g.out_channels; ++co)
      for (int o = 0; o < gy.t; ++o) gb[co] += gy(n, co, o);
    for (int ci = 0; ci < g.in_channels; ++ci)
      for (int i = 0; i < x.t; ++i)
        for (int co = 0; co < g.out_channels; ++co)
          for (int k = 0; k < g.kernel; ++k) {
            const int o = i * g.stride + k - g.padding;
            if (o < 0 || o >= gy.t) continue;
            const std::size_t wi = (ci * g.out_channels + co) * g.kernel + k;
            gw[wi] += x(n, ci, i) * gy(n, co, o);
            if (gx) (*gx)(n, ci, i) += w[wi] * gy(n, co, o);
          }
  }
}

void linear_forward(const Tensor3& x, std::span<const double> w, std::span<const double> b,
                    int out_features, Tensor3& y) {
  const auto in = static_cast<int>(x.sample_size());
  y = Tensor3(x.n, out_features, 1);
  for (int n = 0; n < x.n; ++n) {
    auto xs = x.sample(n);
    for (int o = 0; o < out_features; ++o) {
      double acc = b[o];
      for (int i = 0; i < in; ++i) acc += w[static_cast<std::size_t>(o) * in + i] * xs[i];
      y(n, o, 0) = acc;
    }
  }
}

void linear_backward(const Tensor3& x, std::span<const double> w, const Tensor3& gy, Tensor3* gx,
                     std::span<double> gw, std::span<double> gb) {
  const auto in = static_cast<int>(x.sample_size());
  const int out = gy.c;
  if (gx) *gx = Tensor3(x.n, x.c, x.t);
  for (int n = 0; n < x.n; ++n) {
    auto xs = x.sample(n);
    for (int o = 0; o < out; ++o) {
      const double go = gy(n, o, 0);
      gb[o] += go;
      for (int i = 0; i < in; ++i) {
        gw[static_cast<std::size_t>(o) * in + i] += go * xs[i];
        if (gx) gx->v[n * gx->sample_size() + i] += go * w[static_cast<std::size_t>(o) * in + i];
      }
    }
  }
}

}  // namespace genias::kernels::serial
