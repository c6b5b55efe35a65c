// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "fdsh/detectors.hpp"
#include "fdsh/errors.hpp"
#include "fdsh/kernels.hpp"

namespace fdsh {
namespace {

double squared_distance(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct AeTrace {
  Tensor a1, a2, a3, out;
};

AeTrace ae_forward(const AeModel& m, const Tensor& x) {
  require_shape(x, {m.input_dim()}, "autoencoder input");
  if (!x.all_finite()) throw NumericError("autoencoder: non-finite input");
  AeTrace t;
  t.a1 = m.enc1.forward(x);
  t.a2 = m.enc2.forward(t.a1);
  t.a3 = m.dec1.forward(t.a2);
  t.out = m.dec2.forward(t.a3);
  return t;
}

double weight_penalty(const AeModel& m) {
  return kernels::sum_squares(m.enc1.weight.values()) + kernels::sum_squares(m.enc2.weight.values()) +
         kernels::sum_squares(m.dec1.weight.values()) + kernels::sum_squares(m.dec2.weight.values());
}

struct VaeTrace {
  Tensor hidden, mu, logvar, sigma, z, dec_hidden, out;
};

VaeTrace vae_forward(const VaeModel& m, const Tensor& x, const Tensor* noise) {
  require_shape(x, {m.input_dim()}, "vae input");
  if (noise != nullptr) require_shape(*noise, {m.latent_dim()}, "vae noise");
  if (!x.all_finite() || (noise != nullptr && !noise->all_finite())) {
    throw NumericError("vae: non-finite input");
  }
  VaeTrace t;
  t.hidden = m.enc_hidden.forward(x);
  t.mu = m.enc_mu.forward(t.hidden);
  t.logvar = m.enc_logvar.forward(t.hidden);
  t.sigma = Tensor::zeros(m.latent_dim());
  t.z = t.mu;
  for (std::size_t j = 0; j < t.z.size(); ++j) {
    t.sigma[j] = std::exp(0.5 * t.logvar[j]);
    if (noise != nullptr) t.z[j] += t.sigma[j] * (*noise)[j];
  }
  t.dec_hidden = m.dec_hidden.forward(t.z);
  t.out = m.dec_out.forward(t.dec_hidden);
  return t;
}

VaeLoss parts_of(const VaeTrace& t, const Tensor& x) {
  return {0.5 * squared_distance(x, t.out), kl_divergence(t.mu.values(), t.logvar.values())};
}

}  // namespace

// ---- autoencoder ----

AeModel AeModel::init(std::size_t input, double lambda, Rng& rng, std::size_t wide,
                      std::size_t narrow) {
  if (input == 0 || wide == 0 || narrow == 0) throw ConfigError("autoencoder: zero-width layer");
  if (!(lambda >= 0.0)) throw ConfigError("autoencoder: lambda must be >= 0");
  AeModel m;
  m.enc1 = DenseLayer::init(input, wide, Activation::Tanh, rng);
  m.enc2 = DenseLayer::init(wide, narrow, Activation::Tanh, rng);
  m.dec1 = DenseLayer::init(narrow, wide, Activation::Tanh, rng);
  m.dec2 = DenseLayer::init(wide, input, Activation::Identity, rng);
  m.lambda = lambda;
  return m;
}

Tensor ae_reconstruct(const AeModel& model, const Tensor& x) { return ae_forward(model, x).out; }

double ae_score(const AeModel& model, const Tensor& x) {
  return squared_distance(x, ae_forward(model, x).out);
}

double ae_loss(const AeModel& model, const Tensor& x) {
  return ae_score(model, x) + model.lambda * weight_penalty(model);
}

double ae_loss_grad(const AeModel& model, const Tensor& x, AeModel& grad) {
  const AeTrace t = ae_forward(model, x);
  Tensor d = Tensor::zeros(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = 2.0 * (t.out[i] - x[i]);
  d = model.dec2.backward(t.a3, t.out, d, grad.dec2);
  d = model.dec1.backward(t.a2, t.a3, d, grad.dec1);
  d = model.enc2.backward(t.a1, t.a2, d, grad.enc2);
  model.enc1.backward(x, t.a1, d, grad.enc1);
  const double l2 = 2.0 * model.lambda;
  kernels::axpy(l2, model.enc1.weight.values(), grad.enc1.weight.values());
  kernels::axpy(l2, model.enc2.weight.values(), grad.enc2.weight.values());
  kernels::axpy(l2, model.dec1.weight.values(), grad.dec1.weight.values());
  kernels::axpy(l2, model.dec2.weight.values(), grad.dec2.weight.values());
  return squared_distance(x, t.out) + model.lambda * weight_penalty(model);
}

// ---- variational autoencoder ----

VaeModel VaeModel::init(std::size_t input, std::size_t latent, Rng& rng, std::size_t hidden) {
  if (input == 0 || latent == 0 || hidden == 0) throw ConfigError("vae: zero-width layer");
  VaeModel m;
  m.enc_hidden = DenseLayer::init(input, hidden, Activation::Tanh, rng);
  m.enc_mu = DenseLayer::init(hidden, latent, Activation::Identity, rng);
  m.enc_logvar = DenseLayer::init(hidden, latent, Activation::Identity, rng);
  m.dec_hidden = DenseLayer::init(latent, hidden, Activation::Tanh, rng);
  m.dec_out = DenseLayer::init(hidden, input, Activation::Identity, rng);
  return m;
}

double kl_divergence(std::span<const double> mu, std::span<const double> logvar) {
  if (mu.size() != logvar.size()) throw ShapeError("kl_divergence: mu/logvar size mismatch");
  double kl = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    // exp(lv) - 1 - lv >= 0, accumulated separately so rounding cannot push it negative.
    const double lv = logvar[j];
    kl += 0.5 * (mu[j] * mu[j] + std::max(0.0, std::expm1(lv) - lv));
  }
  if (!std::isfinite(kl)) throw NumericError("kl_divergence: non-finite result");
  return kl;
}

VaeLoss vae_loss_parts(const VaeModel& model, const Tensor& x, const Tensor& noise) {
  return parts_of(vae_forward(model, x, &noise), x);
}

double vae_loss(const VaeModel& model, const Tensor& x, const Tensor& noise) {
  return vae_loss_parts(model, x, noise).total();
}

double vae_loss_grad(const VaeModel& model, const Tensor& x, const Tensor& noise, VaeModel& grad) {
  const VaeTrace t = vae_forward(model, x, &noise);
  Tensor d = Tensor::zeros(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = t.out[i] - x[i];
  d = model.dec_out.backward(t.dec_hidden, t.out, d, grad.dec_out);
  const Tensor dz = model.dec_hidden.backward(t.z, t.dec_hidden, d, grad.dec_hidden);
  const std::size_t k = model.latent_dim();
  Tensor dmu = Tensor::zeros(k);
  Tensor dlv = Tensor::zeros(k);
  for (std::size_t j = 0; j < k; ++j) {
    dmu[j] = dz[j] + t.mu[j];
    dlv[j] = dz[j] * noise[j] * 0.5 * t.sigma[j] + 0.5 * std::expm1(t.logvar[j]);
  }
  Tensor dh = model.enc_mu.backward(t.hidden, t.mu, dmu, grad.enc_mu);
  const Tensor dh2 = model.enc_logvar.backward(t.hidden, t.logvar, dlv, grad.enc_logvar);
  kernels::axpy(1.0, dh2.values(), dh.values());
  model.enc_hidden.backward(x, t.hidden, dh, grad.enc_hidden);
  return parts_of(t, x).total();
}

double vae_score(const VaeModel& model, const Tensor& x) {
  return parts_of(vae_forward(model, x, nullptr), x).total();
}

}  // namespace fdsh
