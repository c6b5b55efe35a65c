// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "fdsh/errors.hpp"
#include "fdsh/nn.hpp"

namespace fdsh {
namespace {

// Central differences carry roundoff of order eps_machine * |f| / eps, so
// components that are zero up to that noise are compared against a floor
// proportional to the loss itself.
constexpr double kRelativeFloor = 1e-6;

double finite_loss(const ScalarFn& loss, const Tensor& theta) {
  const double v = loss(theta);
  if (!std::isfinite(v)) throw NumericError("grad_check: loss returned a non-finite value");
  return v;
}

}  // namespace

Tensor numeric_gradient(const ScalarFn& loss, const Tensor& theta, double eps) {
  if (!(eps > 1e-8 && eps < 1e-3)) throw InputError("grad_check: eps must lie in (1e-8, 1e-3)");
  Tensor probe = theta;
  Tensor grad(theta.dims());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = finite_loss(loss, probe);
    probe[i] = orig - eps;
    const double down = finite_loss(loss, probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double grad_check(const ScalarFn& loss, const Tensor& analytic, const Tensor& theta, double eps) {
  if (!analytic.same_shape(theta)) throw ShapeError("grad_check: gradient/parameter shape mismatch");
  const Tensor numeric = numeric_gradient(loss, theta, eps);
  const double floor = kRelativeFloor * std::max(1.0, std::abs(finite_loss(loss, theta)));
  double worst = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double a = analytic[i];
    const double n = numeric[i];
    const double denom = std::max(std::abs(a) + std::abs(n), floor);
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

Tensor flatten(std::span<const Tensor* const> parts) {
  std::vector<double> v;
  for (const Tensor* t : parts) v.insert(v.end(), t->values().begin(), t->values().end());
  if (v.empty()) throw ShapeError("flatten: no parameters");
  return Tensor::vector(std::move(v));
}

void unflatten(const Tensor& flat, std::span<Tensor* const> parts) {
  std::size_t total = 0;
  for (const Tensor* t : parts) total += t->size();
  if (flat.size() != total) throw ShapeError("unflatten: size mismatch");
  std::size_t off = 0;
  for (Tensor* t : parts) {
    std::copy_n(flat.values().begin() + static_cast<std::ptrdiff_t>(off), t->size(),
                t->values().begin());
    off += t->size();
  }
}

}  // namespace fdsh
