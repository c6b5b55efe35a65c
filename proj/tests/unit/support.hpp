// SPDX-License-Identifier: Apache-2.0
#pragma once

// Shared helpers for the unit tests: random tensors, naive reference
// arithmetic and finite-difference checks over whole models.

#include <cmath>
#include <random>
#include <vector>

#include "fdsh/nn.hpp"
#include "fdsh/rng.hpp"
#include "fdsh/tensor.hpp"

namespace fdsh::test {

inline Tensor random_tensor(std::vector<std::size_t> dims, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(dims));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values()) v = u(rng);
  return t;
}

inline Tensor random_normal(std::size_t n, Rng& rng) {
  Tensor t = Tensor::zeros(n);
  std::normal_distribution<double> d(0.0, 1.0);
  for (double& v : t.values()) v = d(rng);
  return t;
}

// y = W x with plain loops, no kernels.
inline std::vector<double> naive_matvec(const Tensor& w, const Tensor& x) {
  std::vector<double> y(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) y[r] += w.at(r, c) * x[c];
  }
  return y;
}

/// Worst relative error between `analytic` (a model-shaped gradient) and
/// central differences of `loss` over every parameter of `model`.
template <class Model, class Loss>
double model_grad_error(const Model& model, const Model& analytic, Loss&& loss,
                        double eps = 1e-5) {
  const Tensor theta = flatten_params(model);
  const Tensor g = flatten_params(analytic);
  Model probe = model;
  const ScalarFn f = [&](const Tensor& flat) {
    unflatten_params(flat, probe);
    return loss(probe);
  };
  return grad_check(f, g, theta, eps);
}

}  // namespace fdsh::test
