// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "fdsh/errors.hpp"
#include "fdsh/stats.hpp"
#include "fdsh/trainer.hpp"

namespace fdsh {
namespace {

// Sub-streams of the training seed.
enum Stream : std::uint64_t { kInit = 1, kShuffle = 2, kNoise = 3, kPolicy = 4, kEpisodeBase = 0x1000 };

bool is_healthy(const FeatureWindow& w) { return !w.label; }

template <class Model>
void scale_into(Model& grad, double factor) {
  for (Tensor* t : tensors_of(grad)) {
    for (double& v : t->values()) v *= factor;
  }
}

template <class Model>
void append_params(Model& model, Model& grad, std::vector<Tensor*>& params,
                   std::vector<const Tensor*>& grads) {
  const auto p = tensors_of(model);
  const auto g = tensors_of(static_cast<const Model&>(grad));
  params.insert(params.end(), p.begin(), p.end());
  grads.insert(grads.end(), g.begin(), g.end());
}

void check_finite(double v, int epoch, const char* what) {
  if (!std::isfinite(v)) throw TrainingError(epoch, std::string(what) + " loss is not finite");
}

struct BatchLosses {
  LossComponents sum;
  std::size_t batches = 0;
  std::size_t ae_batches = 0;
  std::size_t dnn_batches = 0;
};

}  // namespace

double total_loss(const LossComponents& c, const LossWeights& w) {
  const double parts[] = {c.svm, c.ae, c.vae, c.dnn, c.rl};
  const double weights[] = {w.svm, w.ae, w.vae, w.dnn, w.rl};
  double total = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    if (!std::isfinite(parts[i]) || parts[i] < 0.0) {
      throw InputError("total_loss: component " + std::to_string(i) + " must be finite and >= 0");
    }
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw InputError("total_loss: weight " + std::to_string(i) + " must be finite and >= 0");
    }
    total += weights[i] * parts[i];
  }
  return total;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("train: eta must be > 0");
  if (!(C > 0.0)) throw ConfigError("train: C must be > 0");
  if (!(lambda >= 0.0)) throw ConfigError("train: lambda must be >= 0");
  if (!(clip_norm >= 0.0)) throw ConfigError("train: clip norm must be >= 0");
  for (double w : {weights.svm, weights.ae, weights.vae, weights.dnn, weights.rl}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("train: loss weights must be >= 0");
  }
  for (double f : {train_fraction, val_fraction, test_fraction}) {
    if (!(f > 0.0)) throw ConfigError("train: split fractions must be > 0");
  }
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("train: split fractions must sum to 1");
  }
  features.validate();
  if (hidden < 1 || latent < 1) throw ConfigError("train: hidden and latent must be >= 1");
  if (!(threshold_quantile > 0.0 && threshold_quantile < 1.0)) {
    throw ConfigError("train: threshold quantile must be in (0,1)");
  }
  q.validate();
  for (double e : {epsilon_start, epsilon_end}) {
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("train: epsilon must be in [0,1]");
  }
  if (rl_episodes < 0) throw ConfigError("train: rl episodes must be >= 0");
  if (rl_horizon < 1) throw ConfigError("train: rl horizon must be >= 1");
  rl_sim.validate();
}

DataSplits prepare_splits(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.telemetry.empty()) throw InputError("prepare_splits: no telemetry");
  const auto [lo_it, hi_it] = std::minmax_element(
      data.telemetry.begin(), data.telemetry.end(),
      [](const TelemetrySample& a, const TelemetrySample& b) { return a.t < b.t; });
  const double t0 = static_cast<double>(lo_it->t);
  const double span = static_cast<double>(hi_it->t - lo_it->t + 1);
  const double train_end = t0 + cfg.train_fraction * span;
  const double val_end = t0 + (cfg.train_fraction + cfg.val_fraction) * span;

  std::vector<TelemetrySample> fit_range;
  for (const auto& s : data.telemetry) {
    if (static_cast<double>(s.t) < train_end) fit_range.push_back(s);
  }
  DataSplits out;
  out.normalizer = Normalizer::fit(std::span<const TelemetrySample>(fit_range));
  for (auto& w : make_windows(data, out.normalizer, cfg.features)) {
    const double t = static_cast<double>(w.t_end);
    if (t < train_end) {
      out.train.push_back(std::move(w));
    } else if (t < val_end) {
      out.val.push_back(std::move(w));
    } else {
      out.test.push_back(std::move(w));
    }
  }
  if (out.train.empty()) throw InputError("prepare_splits: training split is empty");
  return out;
}

void calibrate_detectors(DetectorStack& stack, std::span<const FeatureWindow> train,
                         std::span<const FeatureWindow> val) {
  const double q = stack.fusion.quantile;
  std::vector<double> ae_raw, vae_raw;
  for (const auto& w : train) {
    if (!is_healthy(w)) continue;
    const Tensor x = encode_sequence(stack.encoder, w);
    ae_raw.push_back(ae_score(stack.ae, x));
    vae_raw.push_back(vae_score(stack.vae, x));
  }
  stack.calibration = Calibration::fit(ae_raw, vae_raw, q);
  std::vector<double> fused;
  for (const auto& w : val) {
    if (is_healthy(w)) fused.push_back(score_window(stack, w).fused);
  }
  if (fused.empty()) {
    for (std::size_t i = 0; i < ae_raw.size(); ++i) {
      fused.push_back(
          fuse(stack.fusion, stack.calibration.ae(ae_raw[i]), stack.calibration.vae(vae_raw[i])));
    }
  }
  stack.fusion.threshold = fit_threshold(fused, q);
}

TrainResult train(const TrainConfig& cfg, const DataSplits& splits) {
  cfg.validate();
  if (splits.train.empty()) throw InputError("train: empty training split");
  const std::size_t input = cfg.hidden + cfg.features.embed_dim;

  Rng init = make_rng(cfg.seed, kInit);
  ModelBundle b{.detectors = {},
                .predictor = {},
                .q = QTable(cfg.q),
                .seed = cfg.seed,
                .config_fingerprint = cfg.config_fingerprint};
  DetectorStack& st = b.detectors;
  st.features = cfg.features;
  st.normalizer = splits.normalizer;
  st.encoder = LstmCellParams::init(kMetricCount, cfg.hidden, init);
  st.svm = SvmModel::zeros(kClassCount, input, cfg.C);
  st.ae = AeModel::init(input, cfg.lambda, init);
  st.vae = VaeModel::init(input, cfg.latent, init);
  st.fusion.quantile = cfg.threshold_quantile;
  b.predictor = PredictorModel::init(cfg.hidden, cfg.features.embed_dim, init);

  Rng shuffle_rng = make_rng(cfg.seed, kShuffle);
  Rng noise_rng = make_rng(cfg.seed, kNoise);
  Rng policy_rng = make_rng(cfg.seed, kPolicy);
  std::normal_distribution<double> normal(0.0, 1.0);
  const SgdConfig sgd{cfg.eta, cfg.clip_norm};

  std::vector<std::size_t> order(splits.train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  int episode = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    BatchLosses acc;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      auto g_enc = zeros_like(st.encoder);
      auto g_svm = zeros_like(st.svm);
      auto g_ae = zeros_like(st.ae);
      auto g_vae = zeros_like(st.vae);
      auto g_pred = zeros_like(b.predictor);

      std::vector<EncodedWindow> encoded;
      std::vector<Tensor> xs;
      std::vector<std::size_t> labels;
      std::vector<std::size_t> healthy;
      std::vector<FeatureWindow> with_target;
      for (std::size_t k = start; k < end; ++k) {
        const FeatureWindow& w = splits.train[order[k]];
        if (w.future_fault) with_target.push_back(w);
        encoded.push_back(encode_sequence_traced(st.encoder, w));
        xs.push_back(encoded.back().features);
        labels.push_back(class_index(w.label));
        if (is_healthy(w)) healthy.push_back(xs.size() - 1);
      }

      const double n = static_cast<double>(xs.size());
      std::vector<Tensor> dxs;
      const double share = n / static_cast<double>(splits.train.size());
      const double l_svm = svm_loss_grad(st.svm, xs, labels, g_svm, &dxs, share);
      check_finite(l_svm, epoch, "svm");
      scale_into(g_svm, cfg.weights.svm);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        for (double& v : dxs[i].values()) v *= cfg.weights.svm;
        encode_sequence_backward(st.encoder, encoded[i], dxs[i].values(), g_enc);
      }
      acc.sum.svm += l_svm;
      ++acc.batches;

      if (!healthy.empty()) {
        double l_ae = 0.0;
        double l_vae = 0.0;
        for (std::size_t i : healthy) {
          l_ae += ae_loss_grad(st.ae, xs[i], g_ae);
          Tensor noise = Tensor::zeros(cfg.latent);
          for (double& v : noise.values()) v = normal(noise_rng);
          l_vae += vae_loss_grad(st.vae, xs[i], noise, g_vae);
        }
        const double h = static_cast<double>(healthy.size());
        check_finite(l_ae, epoch, "autoencoder");
        check_finite(l_vae, epoch, "vae");
        scale_into(g_ae, cfg.weights.ae / h);
        scale_into(g_vae, cfg.weights.vae / h);
        acc.sum.ae += l_ae / h;
        acc.sum.vae += l_vae / h;
        ++acc.ae_batches;
      }

      if (!with_target.empty()) {
        const double l_dnn = dnn_loss_grad(b.predictor, with_target, g_pred);
        check_finite(l_dnn, epoch, "predictor");
        scale_into(g_pred, cfg.weights.dnn);
        acc.sum.dnn += l_dnn;
        ++acc.dnn_batches;
      }

      std::vector<Tensor*> params;
      std::vector<const Tensor*> grads;
      append_params(st.encoder, g_enc, params, grads);
      append_params(st.svm, g_svm, params, grads);
      append_params(st.ae, g_ae, params, grads);
      append_params(st.vae, g_vae, params, grads);
      append_params(b.predictor, g_pred, params, grads);
      try {
        sgd_step(params, grads, sgd);
      } catch (const NumericError& e) {
        throw TrainingError(epoch, e.what());
      }
    }

    calibrate_detectors(st, splits.train, splits.val);

    const int episodes_now = static_cast<int>(
        (static_cast<long long>(cfg.rl_episodes) * (epoch + 1)) / cfg.epochs -
        (static_cast<long long>(cfg.rl_episodes) * epoch) / cfg.epochs);
    double rl_sum = 0.0;
    DetectorObserver observer(st);
    for (int k = 0; k < episodes_now; ++k, ++episode) {
      const double frac =
          cfg.rl_episodes > 1 ? static_cast<double>(episode) / (cfg.rl_episodes - 1) : 0.0;
      EpisodeConfig ec;
      ec.horizon = cfg.rl_horizon;
      ec.epsilon = cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
      ec.learn = true;
      SimConfig sc = cfg.rl_sim;
      sc.ticks = cfg.rl_horizon;
      Simulation sim(sc, derive_seed(cfg.seed, kEpisodeBase + static_cast<std::uint64_t>(episode)));
      rl_sum += run_episode(sim, observer, b.q, ec, policy_rng).td_loss;
    }

    EpochLoss el;
    el.epoch = epoch;
    el.components.svm = acc.sum.svm / static_cast<double>(acc.batches);
    if (acc.ae_batches > 0) {
      el.components.ae = acc.sum.ae / static_cast<double>(acc.ae_batches);
      el.components.vae = acc.sum.vae / static_cast<double>(acc.ae_batches);
    }
    if (acc.dnn_batches > 0) el.components.dnn = acc.sum.dnn / static_cast<double>(acc.dnn_batches);
    el.components.rl = episodes_now > 0 ? rl_sum / episodes_now : 0.0;
    try {
      el.total = total_loss(el.components, cfg.weights);
    } catch (const InputError& e) {
      throw TrainingError(epoch, e.what());
    }
    check_finite(el.total, epoch, "total");
    result.curve.push_back(el);
  }
  result.bundle = std::move(b);
  return result;
}

void write_loss_curve_csv(std::ostream& os, std::span<const EpochLoss> curve) {
  os << "epoch,l_svm,l_ae,l_vae,l_dnn,l_rl,l_total\n";
  const auto old = os.precision(17);
  for (const auto& e : curve) {
    os << e.epoch << ',' << e.components.svm << ',' << e.components.ae << ',' << e.components.vae
       << ',' << e.components.dnn << ',' << e.components.rl << ',' << e.total << '\n';
  }
  os.precision(old);
}

}  // namespace fdsh
