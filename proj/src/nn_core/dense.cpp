// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>

#include "fdsh/errors.hpp"
#include "fdsh/kernels.hpp"
#include "fdsh/nn.hpp"

namespace fdsh {
namespace {

constexpr double kSigmoidHi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
constexpr double kSigmoidLo = std::numeric_limits<double>::min();

double activate(double z, Activation act) noexcept {
  switch (act) {
    case Activation::Identity:
      return z;
    case Activation::Sigmoid:
      return sigmoid(z);
    case Activation::Tanh:
      return std::tanh(z);
    case Activation::Relu:
      return z > 0.0 ? z : 0.0;
  }
  return z;
}

// Derivative expressed through the activated value y.
double activation_slope(double y, Activation act) noexcept {
  switch (act) {
    case Activation::Identity:
      return 1.0;
    case Activation::Sigmoid:
      return y * (1.0 - y);
    case Activation::Tanh:
      return 1.0 - y * y;
    case Activation::Relu:
      return y > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace

double sigmoid(double z) noexcept {
  const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(s, kSigmoidLo, kSigmoidHi);
}

Tensor dense_forward(const Tensor& w, const Tensor& b, const Tensor& x, Activation activation) {
  if (w.rank() != 2) throw ShapeError("dense weight must be rank 2, got " + shape_string(w.dims()));
  require_shape(x, {w.cols()}, "dense input");
  require_shape(b, {w.rows()}, "dense bias");
  Tensor y = Tensor::zeros(w.rows());
  kernels::gemv(w.values(), x.values(), y.values());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = activate(y[i] + b[i], activation);
  return y;
}

DenseLayer DenseLayer::init(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  DenseLayer layer{Tensor::zeros(out, in), Tensor::zeros(out), act};
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : layer.weight.values()) v = dist(rng);
  return layer;
}

Tensor DenseLayer::backward(const Tensor& x, const Tensor& y, const Tensor& dy,
                            DenseLayer& grad) const {
  require_shape(dy, {out_dim()}, "dense output gradient");
  require_shape(x, {in_dim()}, "dense input");
  Tensor dz = dy;
  for (std::size_t i = 0; i < dz.size(); ++i) dz[i] *= activation_slope(y[i], activation);
  kernels::ger_acc(dz.values(), x.values(), grad.weight.values());
  kernels::axpy(1.0, dz.values(), grad.bias.values());
  Tensor dx = Tensor::zeros(in_dim());
  kernels::gemv_t_acc(weight.values(), dz.values(), dx.values());
  return dx;
}

}  // namespace fdsh
