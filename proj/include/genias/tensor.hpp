#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace genias {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Where a window was cut from.
struct Origin {
  std::string series;
  std::size_t start = 0;
};

/// A T x D window stored row-major: values[t * dims + d].
struct Window {
  std::size_t length = 0;
  std::size_t dims = 0;
  std::vector<double> values;
  Origin origin;
  std::optional<bool> label;

  Window() = default;
  Window(std::size_t t, std::size_t d, double fill = 0.0)
      : length(t), dims(d), values(t * d, fill) {}

  double& at(std::size_t t, std::size_t d) { return values[t * dims + d]; }
  double at(std::size_t t, std::size_t d) const { return values[t * dims + d]; }

  std::size_t size() const { return values.size(); }
  bool same_shape(const Window& o) const { return length == o.length && dims == o.dims; }
};

inline void require_same_shape(const Window& a, const Window& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.length) + "x" +
                     std::to_string(a.dims) + " vs " + std::to_string(b.length) + "x" +
                     std::to_string(b.dims) + ")");
  }
}

/// Dense batch x channels x time activation buffer used by the network layers.
struct Tensor3 {
  int n = 0;
  int c = 0;
  int t = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(int n_, int c_, int t_, double fill = 0.0)
      : n(n_), c(c_), t(t_), v(static_cast<std::size_t>(n_) * c_ * t_, fill) {}

  std::size_t index(int b, int ch, int s) const {
    return (static_cast<std::size_t>(b) * c + ch) * t + s;
  }
  double& operator()(int b, int ch, int s) { return v[index(b, ch, s)]; }
  double operator()(int b, int ch, int s) const { return v[index(b, ch, s)]; }

  std::size_t sample_size() const { return static_cast<std::size_t>(c) * t; }
  std::span<double> sample(int b) { return {v.data() + b * sample_size(), sample_size()}; }
  std::span<const double> sample(int b) const {
    return {v.data() + b * sample_size(), sample_size()};
  }

  /// Same buffer viewed with a different (c, t) factorization.
  Tensor3 reshaped(int c_, int t_) const& {
    Tensor3 r = *this;
    r.c = c_;
    r.t = t_;
    return r;
  }
  Tensor3 reshaped(int c_, int t_) && {
    c = c_;
    t = t_;
    return std::move(*this);
  }
};

/// Packs windows (T x D, row-major) into a (B, D, T) channel-major batch.
Tensor3 to_batch(std::span<const Window> windows);

/// Inverse of to_batch; origins are not carried.
std::vector<Window> from_batch(const Tensor3& batch);

}  // namespace genias
