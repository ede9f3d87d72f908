#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genias/kernels.hpp"
#include "genias/rng.hpp"
#include "genias/tensor.hpp"

namespace genias::nn {

struct Parameter {
  std::string name;
  std::vector<double> value;
  std::vector<double> grad;

  Parameter() = default;
  Parameter(std::string n, std::size_t size) : name(std::move(n)), value(size, 0.0), grad(size, 0.0) {}

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
  /// U(-bound, bound) initialization.
  void init_uniform(Rng& rng, double bound);
};

struct Conv1d {
  ConvGeom geom;
  Parameter weight, bias;

  Conv1d() = default;
  Conv1d(std::string name, ConvGeom g);
  void init(Rng& rng);
  Tensor3 forward(const Tensor3& x) const;
  /// Accumulates into weight/bias grads; returns dL/dx.
  Tensor3 backward(const Tensor3& x, const Tensor3& gy);
};

struct TConv1d {
  TConvGeom geom;
  Parameter weight, bias;

  TConv1d() = default;
  TConv1d(std::string name, TConvGeom g);
  void init(Rng& rng);
  Tensor3 forward(const Tensor3& x) const;
  Tensor3 backward(const Tensor3& x, const Tensor3& gy);
};

struct Linear {
  int in_features = 0;
  int out_features = 0;
  Parameter weight, bias;

  Linear() = default;
  Linear(std::string name, int in, int out, bool with_bias = true);
  void init(Rng& rng);
  /// Input samples are flattened (c * t must equal in_features); output is (n, out, 1).
  Tensor3 forward(const Tensor3& x) const;
  Tensor3 backward(const Tensor3& x, const Tensor3& gy);
  bool has_bias = true;
};

Tensor3 relu(const Tensor3& x);
/// gy masked by (pre-activation > 0).
Tensor3 relu_backward(const Tensor3& pre, const Tensor3& gy);
Tensor3 sigmoid(const Tensor3& x);
Tensor3 sigmoid_backward(const Tensor3& out, const Tensor3& gy);

/// Inverted dropout. An empty mask means inference mode (identity).
struct DropoutMask {
  std::vector<double> scale;
};
DropoutMask make_dropout_mask(std::size_t n, double rate, Rng& rng);
Tensor3 apply_dropout(const Tensor3& x, const DropoutMask& mask);

double softplus(double x);
double sigmoid(double x);

/// Rescales all gradients so their global L2 norm is at most max_norm. Returns the pre-clip norm.
double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm);

class Adam {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  explicit Adam(const std::vector<Parameter*>& params, Options opts);
  void step(const std::vector<Parameter*>& params);
  void set_lr(double lr) { opts_.lr = lr; }
  double lr() const { return opts_.lr; }

 private:
  Options opts_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace genias::nn
