// SPDX-License-Identifier: Apache-2.0
#pragma once

// Failure prediction: an LSTM over the telemetry window with a small dense
// head estimating the probability that a fault is active within the next k ticks.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fdsh/features.hpp"
#include "fdsh/nn.hpp"

namespace fdsh {

struct PredictorModel {
  LstmCellParams lstm;
  DenseLayer hidden;  // (lstm hidden + d_text) -> 16, tanh
  DenseLayer output;  // 16 -> 1, sigmoid
  double decision_threshold = 0.5;

  static PredictorModel init(std::size_t lstm_hidden, std::size_t embed_dim, Rng& rng,
                             std::size_t head_width = 16);
  /// All-zero parameters with the same layout (output 0.5 for every input).
  static PredictorModel zeros(std::size_t lstm_hidden, std::size_t embed_dim,
                              std::size_t head_width = 16);

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    visit_prefixed("lstm.", self.lstm, f);
    visit_prefixed("hidden.", self.hidden, f);
    visit_prefixed("output.", self.output, f);
  }
};

/// Probability in (0,1) that window.future_fault holds.
double predict_failure(const PredictorModel& model, const FeatureWindow& window);

/// (1/n) sum (y_i - p_i)^2; InputError on an empty or mismatched batch.
double mean_squared_error(std::span<const double> targets, std::span<const double> predictions);

/// Mean squared error of predict_failure over the windows with a defined target.
double dnn_loss(const PredictorModel& model, std::span<const FeatureWindow> batch);
/// Same loss; accumulates its gradient into `grad`.
double dnn_loss_grad(const PredictorModel& model, std::span<const FeatureWindow> batch,
                     PredictorModel& grad);

struct PredictionRow {
  std::int64_t t = 0;
  int node = 0;
  double p_fail = 0.0;
  bool predicted = false;
};

/// CSV with header t,node,p_fail,predicted.
void write_predictions_csv(std::ostream& os, std::span<const PredictionRow> rows);

}  // namespace fdsh
