// SPDX-License-Identifier: Apache-2.0
#pragma once

// Joint training of the detection stack and the failure predictor by clipped
// minibatch SGD on a weighted sum of their losses, interleaved with
// Q-learning episodes on the simulator, plus a binary checkpoint format.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fdsh/detectors.hpp"
#include "fdsh/features.hpp"
#include "fdsh/healer.hpp"
#include "fdsh/predictor.hpp"

namespace fdsh {

struct LossWeights {
  double svm = 1.0;
  double ae = 1.0;
  double vae = 1.0;
  double dnn = 1.0;
  double rl = 1.0;
};

struct LossComponents {
  double svm = 0.0;
  double ae = 0.0;
  double vae = 0.0;
  double dnn = 0.0;
  double rl = 0.0;
};

/// sum of w_i * L_i. InputError on a negative or non-finite component or weight.
double total_loss(const LossComponents& components, const LossWeights& weights);

struct TrainConfig {
  double eta = 0.01;
  int epochs = 30;
  std::size_t batch_size = 32;
  double C = 1.0;
  double lambda = 1e-4;
  double clip_norm = 5.0;
  LossWeights weights;
  std::uint64_t seed = 42;
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  double test_fraction = 0.15;

  FeatureConfig features;
  std::size_t hidden = 32;  // encoder and predictor LSTM width
  std::size_t latent = 8;
  double threshold_quantile = 0.99;

  QConfig q;
  double epsilon_start = 0.3;
  double epsilon_end = 0.01;
  int rl_episodes = 500;
  std::int64_t rl_horizon = 200;
  SimConfig rl_sim;  // cluster used for the RL episodes

  std::uint64_t config_fingerprint = 0;  // stored in checkpoints

  void validate() const;
};

struct ModelBundle {
  DetectorStack detectors;
  PredictorModel predictor;
  QTable q;
  std::uint64_t seed = 0;
  std::uint64_t config_fingerprint = 0;
};

struct EpochLoss {
  int epoch = 0;
  LossComponents components;
  double total = 0.0;
};

struct DataSplits {
  Normalizer normalizer;
  std::vector<FeatureWindow> train;
  std::vector<FeatureWindow> val;
  std::vector<FeatureWindow> test;
};

/// Chronological split on the end tick of each window: a window belongs to the
/// first split whose cumulative fraction of the tick range covers it. The
/// normalizer is fitted on telemetry of the training range only.
DataSplits prepare_splits(const Dataset& data, const TrainConfig& cfg);

struct TrainResult {
  ModelBundle bundle;
  std::vector<EpochLoss> curve;
};

/// Deterministic given (cfg, data). TrainingError carries the epoch index on divergence.
TrainResult train(const TrainConfig& cfg, const DataSplits& splits);

/// Re-fits score calibration and the alarm threshold: references from healthy
/// training windows, threshold from healthy validation windows.
void calibrate_detectors(DetectorStack& stack, std::span<const FeatureWindow> train,
                         std::span<const FeatureWindow> val);

/// CSV with header epoch,l_svm,l_ae,l_vae,l_dnn,l_rl,l_total.
void write_loss_curve_csv(std::ostream& os, std::span<const EpochLoss> curve);

// ---- checkpoints ----

using NamedTensors = std::map<std::string, Tensor>;

/// Raw container: "FDSH", version byte, LE tensor table, trailing CRC32.
std::vector<std::uint8_t> encode_tensors(const NamedTensors& tensors);
NamedTensors decode_tensors(std::span<const std::uint8_t> bytes);

NamedTensors bundle_tensors(const ModelBundle& bundle);
ModelBundle bundle_from_tensors(const NamedTensors& tensors);

std::vector<std::uint8_t> encode_checkpoint(const ModelBundle& bundle);
ModelBundle decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_checkpoint(const std::filesystem::path& path);
ModelBundle checkpoint_roundtrip(const ModelBundle& bundle, const std::filesystem::path& path);

/// Every tensor of both bundles has equal shape and bit pattern.
bool bundles_bit_equal(const ModelBundle& a, const ModelBundle& b);

}  // namespace fdsh
