// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "fdsh/errors.hpp"
#include "fdsh/kernels.hpp"
#include "fdsh/nn.hpp"

namespace fdsh {
namespace {

void check_config(const SgdConfig& cfg) {
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) throw ConfigError("sgd: eta must be > 0");
  if (!(cfg.clip_norm >= 0.0)) throw ConfigError("sgd: clip_norm must be >= 0");
}

double clip_scale(double norm, const SgdConfig& cfg) {
  if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) return cfg.clip_norm / norm;
  return 1.0;
}

}  // namespace

Tensor sgd_step(const Tensor& theta, const Tensor& grad, const SgdConfig& cfg) {
  Tensor out = theta;
  Tensor* params[] = {&out};
  const Tensor* grads[] = {&grad};
  sgd_step(params, grads, cfg);
  return out;
}

double sgd_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
                const SgdConfig& cfg) {
  check_config(cfg);
  if (params.size() != grads.size()) throw ShapeError("sgd: parameter/gradient count mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i])) {
      throw ShapeError("sgd: gradient shape " + shape_string(grads[i]->dims()) +
                       " does not match parameter " + shape_string(params[i]->dims()));
    }
    if (!grads[i]->all_finite()) throw NumericError("sgd: non-finite gradient");
    sq += kernels::sum_squares(grads[i]->values());
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("sgd: gradient norm overflow");
  const double step = -cfg.eta * clip_scale(norm, cfg);
  for (std::size_t i = 0; i < params.size(); ++i) {
    kernels::axpy(step, grads[i]->values(), params[i]->values());
  }
  return norm;
}

}  // namespace fdsh
