#include "genias/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace genias::nn {

void Parameter::init_uniform(Rng& rng, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : value) v = dist(rng);
}

Conv1d::Conv1d(std::string name, ConvGeom g)
    : geom(g),
      weight(name + ".weight", static_cast<std::size_t>(g.out_channels) * g.in_channels * g.kernel),
      bias(name + ".bias", static_cast<std::size_t>(g.out_channels)) {}

void Conv1d::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(geom.in_channels * geom.kernel));
  weight.init_uniform(rng, bound);
  bias.init_uniform(rng, bound);
}

Tensor3 Conv1d::forward(const Tensor3& x) const {
  if (x.c != geom.in_channels) throw ShapeError(weight.name + ": input channel mismatch");
  Tensor3 y;
  kernels::conv1d_forward(x, weight.value, bias.value, geom, y);
  return y;
}

Tensor3 Conv1d::backward(const Tensor3& x, const Tensor3& gy) {
  Tensor3 gx;
  kernels::conv1d_backward(x, weight.value, gy, geom, &gx, weight.grad, bias.grad);
  return gx;
}

TConv1d::TConv1d(std::string name, TConvGeom g)
    : geom(g),
      weight(name + ".weight", static_cast<std::size_t>(g.in_channels) * g.out_channels * g.kernel),
      bias(name + ".bias", static_cast<std::size_t>(g.out_channels)) {}

void TConv1d::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(geom.out_channels * geom.kernel));
  weight.init_uniform(rng, bound);
  bias.init_uniform(rng, bound);
}

Tensor3 TConv1d::forward(const Tensor3& x) const {
  if (x.c != geom.in_channels) throw ShapeError(weight.name + ": input channel mismatch");
  Tensor3 y;
  kernels::tconv1d_forward(x, weight.value, bias.value, geom, y);
  return y;
}

Tensor3 TConv1d::backward(const Tensor3& x, const Tensor3& gy) {
  Tensor3 gx;
  kernels::tconv1d_backward(x, weight.value, gy, geom, &gx, weight.grad, bias.grad);
  return gx;
}

Linear::Linear(std::string name, int in, int out, bool with_bias)
    : in_features(in),
      out_features(out),
      weight(name + ".weight", static_cast<std::size_t>(in) * out),
      bias(name + ".bias", with_bias ? static_cast<std::size_t>(out) : 0),
      has_bias(with_bias) {}

void Linear::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  weight.init_uniform(rng, bound);
  bias.init_uniform(rng, bound);
}

Tensor3 Linear::forward(const Tensor3& x) const {
  if (static_cast<int>(x.sample_size()) != in_features)
    throw ShapeError(weight.name + ": expected " + std::to_string(in_features) + " features, got " +
                     std::to_string(x.sample_size()));
  Tensor3 y;
  if (has_bias) {
    kernels::linear_forward(x, weight.value, bias.value, out_features, y);
  } else {
    const std::vector<double> zeros(out_features, 0.0);
    kernels::linear_forward(x, weight.value, zeros, out_features, y);
  }
  return y;
}

Tensor3 Linear::backward(const Tensor3& x, const Tensor3& gy) {
  Tensor3 gx;
  if (has_bias) {
    kernels::linear_backward(x, weight.value, gy, &gx, weight.grad, bias.grad);
  } else {
    std::vector<double> scratch(out_features, 0.0);
    kernels::linear_backward(x, weight.value, gy, &gx, weight.grad, scratch);
  }
  return gx;
}

Tensor3 relu(const Tensor3& x) {
  Tensor3 y = x;
  for (auto& v : y.v) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor3 relu_backward(const Tensor3& pre, const Tensor3& gy) {
  Tensor3 g = gy;
  for (std::size_t i = 0; i < g.v.size(); ++i)
    if (!(pre.v[i] > 0.0)) g.v[i] = 0.0;
  return g;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

Tensor3 sigmoid(const Tensor3& x) {
  Tensor3 y = x;
  for (auto& v : y.v) v = sigmoid(v);
  return y;
}

Tensor3 sigmoid_backward(const Tensor3& out, const Tensor3& gy) {
  Tensor3 g = gy;
  for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] *= out.v[i] * (1.0 - out.v[i]);
  return g;
}

DropoutMask make_dropout_mask(std::size_t n, double rate, Rng& rng) {
  DropoutMask m;
  if (rate <= 0.0) return m;
  m.scale.resize(n);
  std::bernoulli_distribution keep(1.0 - rate);
  const double s = 1.0 / (1.0 - rate);
  for (auto& v : m.scale) v = keep(rng) ? s : 0.0;
  return m;
}

Tensor3 apply_dropout(const Tensor3& x, const DropoutMask& mask) {
  if (mask.scale.empty()) return x;
  Tensor3 y = x;
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] *= mask.scale[i];
  return y;
}

double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params)
    for (double g : p->grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto* p : params)
      for (double& g : p->grad) g *= s;
  }
  return norm;
}

Adam::Adam(const std::vector<Parameter*>& params, Options opts) : opts_(opts) {
  for (const auto* p : params) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void Adam::step(const std::vector<Parameter*>& params) {
  if (params.size() != m_.size()) throw std::logic_error("Adam: parameter list changed");
  ++t_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g;
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g;
      p.value[i] -= opts_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opts_.eps);
    }
  }
}

}  // namespace genias::nn
