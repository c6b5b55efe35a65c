// SPDX-License-Identifier: Apache-2.0
#pragma once

// Fault detection stack: a one-vs-rest linear SVM classifier, an autoencoder
// and a variational autoencoder as anomaly scorers, and calibrated score
// fusion with a fixed alarm threshold.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fdsh/features.hpp"
#include "fdsh/nn.hpp"

namespace fdsh {

// Classifier targets: index 0 is "no fault", 1..5 follow FaultClass.
inline constexpr std::size_t kClassCount = kFaultClassCount + 1;
std::size_t class_index(std::optional<FaultClass> fault) noexcept;
std::optional<FaultClass> class_fault(std::size_t index);
std::string_view class_name(std::size_t index);
std::optional<std::size_t> parse_class_name(std::string_view name) noexcept;

// ---- SVM ----

struct SvmModel {
  Tensor weights;  // (classes, dim)
  Tensor bias;     // (classes)
  double C = 1.0;

  static SvmModel zeros(std::size_t classes, std::size_t dim, double C);
  std::size_t classes() const noexcept { return weights.rows(); }
  std::size_t dim() const noexcept { return weights.cols(); }

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    f("weights", self.weights);
    f("bias", self.bias);
  }
};

/// Sum over classes of 1/2 |w_c|^2 + C * sum_i max(0, 1 - y_ic (w_c . x_i + b_c)),
/// with y_ic = +1 when sample i has label c and -1 otherwise. A minibatch that
/// stands for a larger set passes its share of the regularizer (batch / total).
double svm_loss(const SvmModel& model, std::span<const Tensor> xs,
                std::span<const std::size_t> labels, double regularizer_share = 1.0);

/// Same loss; accumulates its subgradient into `grad` and, when given, the
/// gradient with respect to each input into `dxs` (resized to match xs).
double svm_loss_grad(const SvmModel& model, std::span<const Tensor> xs,
                     std::span<const std::size_t> labels, SvmModel& grad,
                     std::vector<Tensor>* dxs = nullptr, double regularizer_share = 1.0);

struct SvmDecision {
  std::size_t label = 0;
  std::vector<double> scores;  // w_c . x + b_c per class
};

/// Argmax of the class scores; ties go to the lowest index.
SvmDecision svm_classify(const SvmModel& model, const Tensor& x);

// ---- autoencoder ----

struct AeModel {
  DenseLayer enc1;  // in -> 16, tanh
  DenseLayer enc2;  // 16 -> 8, tanh
  DenseLayer dec1;  // 8 -> 16, tanh
  DenseLayer dec2;  // 16 -> in, identity
  double lambda = 1e-4;

  static AeModel init(std::size_t input, double lambda, Rng& rng, std::size_t wide = 16,
                      std::size_t narrow = 8);
  std::size_t input_dim() const noexcept { return enc1.in_dim(); }

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    visit_prefixed("enc1.", self.enc1, f);
    visit_prefixed("enc2.", self.enc2, f);
    visit_prefixed("dec1.", self.dec1, f);
    visit_prefixed("dec2.", self.dec2, f);
  }
};

Tensor ae_reconstruct(const AeModel& model, const Tensor& x);
/// |x - x_hat|^2
double ae_score(const AeModel& model, const Tensor& x);
/// |x - x_hat|^2 + lambda * sum of squared weights over all four layers.
double ae_loss(const AeModel& model, const Tensor& x);
double ae_loss_grad(const AeModel& model, const Tensor& x, AeModel& grad);

// ---- variational autoencoder ----

struct VaeModel {
  DenseLayer enc_hidden;  // in -> 16, tanh
  DenseLayer enc_mu;      // 16 -> latent
  DenseLayer enc_logvar;  // 16 -> latent
  DenseLayer dec_hidden;  // latent -> 16, tanh
  DenseLayer dec_out;     // 16 -> in

  static VaeModel init(std::size_t input, std::size_t latent, Rng& rng, std::size_t hidden = 16);
  std::size_t input_dim() const noexcept { return enc_hidden.in_dim(); }
  std::size_t latent_dim() const noexcept { return enc_mu.out_dim(); }

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    visit_prefixed("enc_hidden.", self.enc_hidden, f);
    visit_prefixed("enc_mu.", self.enc_mu, f);
    visit_prefixed("enc_logvar.", self.enc_logvar, f);
    visit_prefixed("dec_hidden.", self.dec_hidden, f);
    visit_prefixed("dec_out.", self.dec_out, f);
  }
};

/// KL[N(mu, exp(logvar)) || N(0, I)] in closed form.
double kl_divergence(std::span<const double> mu, std::span<const double> logvar);

struct VaeLoss {
  double reconstruction = 0.0;  // 1/2 |x - x_hat(z)|^2
  double kl = 0.0;
  double total() const noexcept { return reconstruction + kl; }
};

/// Negative ELBO with one reparameterized sample z = mu + sigma * noise.
VaeLoss vae_loss_parts(const VaeModel& model, const Tensor& x, const Tensor& noise);
double vae_loss(const VaeModel& model, const Tensor& x, const Tensor& noise);
double vae_loss_grad(const VaeModel& model, const Tensor& x, const Tensor& noise, VaeModel& grad);
/// Noise-free anomaly score: the loss evaluated at z = mu.
double vae_score(const VaeModel& model, const Tensor& x);

// ---- fusion ----

struct FusionConfig {
  double w_ae = 0.5;
  double w_vae = 0.5;
  double threshold = 0.5;  // tau; flag when fused > tau
  double quantile = 0.99;  // calibration quantile q

  void validate() const;
};

/// Maps raw scores to [0,1) by s = raw / (raw + ref), where ref is the
/// q-quantile of raw scores on healthy training windows.
struct Calibration {
  double ae_reference = 0.0;
  double vae_reference = 0.0;

  static Calibration fit(std::span<const double> ae_raw, std::span<const double> vae_raw, double q);
  bool fitted() const noexcept { return ae_reference > 0.0 && vae_reference > 0.0; }
  double ae(double raw) const;
  double vae(double raw) const;
};

struct Detection {
  double fused = 0.0;
  bool flag = false;
};

/// w_ae * s_ae + w_vae * s_vae on already calibrated scores, clipped to [0,1].
double fuse(const FusionConfig& cfg, double s_ae, double s_vae);
Detection fuse_and_detect(const FusionConfig& cfg, const Calibration& calibration, double ae_raw,
                          double vae_raw);

/// tau as the q-quantile of fused scores on held-out healthy windows.
double fit_threshold(std::span<const double> healthy_fused, double q);

// ---- the assembled stack ----

struct DetectorStack {
  FeatureConfig features;
  Normalizer normalizer;
  LstmCellParams encoder;
  SvmModel svm;
  AeModel ae;
  VaeModel vae;
  Calibration calibration;
  FusionConfig fusion;
};

struct WindowScore {
  std::int64_t t = 0;
  int node = 0;
  std::size_t svm_class = 0;
  double ae_score = 0.0;
  double vae_score = 0.0;
  double fused = 0.0;
  bool flag = false;
};

WindowScore score_window(const DetectorStack& stack, const FeatureWindow& window);

/// CSV with header t,node,svm_class,ae_score,vae_score,fused,flag.
void write_scores_csv(std::ostream& os, std::span<const WindowScore> rows);
std::vector<WindowScore> read_scores_csv(std::istream& is);

}  // namespace fdsh
