// SPDX-License-Identifier: Apache-2.0
#include <ostream>

#include "fdsh/errors.hpp"
#include "fdsh/predictor.hpp"

namespace fdsh {
namespace {

struct Forward {
  EncodedWindow encoded;
  Tensor hidden;
  Tensor output;
};

Forward forward(const PredictorModel& m, const FeatureWindow& w) {
  Forward f;
  f.encoded = encode_sequence_traced(m.lstm, w);
  if (f.encoded.features.size() != m.hidden.in_dim()) {
    throw ShapeError("predictor: window features have " + std::to_string(f.encoded.features.size()) +
                     " dims, head expects " + std::to_string(m.hidden.in_dim()));
  }
  f.hidden = m.hidden.forward(f.encoded.features);
  f.output = m.output.forward(f.hidden);
  return f;
}

double target_of(const FeatureWindow& w) {
  if (!w.future_fault) throw InputError("dnn_loss: window without a prediction target");
  return *w.future_fault ? 1.0 : 0.0;
}

}  // namespace

PredictorModel PredictorModel::init(std::size_t lstm_hidden, std::size_t embed_dim, Rng& rng,
                                    std::size_t head_width) {
  PredictorModel m;
  m.lstm = LstmCellParams::init(kMetricCount, lstm_hidden, rng);
  m.hidden = DenseLayer::init(lstm_hidden + embed_dim, head_width, Activation::Tanh, rng);
  m.output = DenseLayer::init(head_width, 1, Activation::Sigmoid, rng);
  return m;
}

PredictorModel PredictorModel::zeros(std::size_t lstm_hidden, std::size_t embed_dim,
                                     std::size_t head_width) {
  PredictorModel m;
  m.lstm = LstmCellParams::zeros(kMetricCount, lstm_hidden);
  m.hidden = {Tensor::zeros(head_width, lstm_hidden + embed_dim), Tensor::zeros(head_width),
              Activation::Tanh};
  m.output = {Tensor::zeros(1, head_width), Tensor::zeros(1), Activation::Sigmoid};
  return m;
}

double predict_failure(const PredictorModel& model, const FeatureWindow& window) {
  return forward(model, window).output[0];
}

double mean_squared_error(std::span<const double> targets, std::span<const double> predictions) {
  if (targets.empty()) throw InputError("mean_squared_error: empty batch");
  if (targets.size() != predictions.size()) throw InputError("mean_squared_error: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double d = targets[i] - predictions[i];
    s += d * d;
  }
  return s / static_cast<double>(targets.size());
}

double dnn_loss(const PredictorModel& model, std::span<const FeatureWindow> batch) {
  if (batch.empty()) throw InputError("dnn_loss: empty batch");
  std::vector<double> y, p;
  for (const auto& w : batch) {
    y.push_back(target_of(w));
    p.push_back(predict_failure(model, w));
  }
  return mean_squared_error(y, p);
}

double dnn_loss_grad(const PredictorModel& model, std::span<const FeatureWindow> batch,
                     PredictorModel& grad) {
  if (batch.empty()) throw InputError("dnn_loss: empty batch");
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& w : batch) {
    const double y = target_of(w);
    const Forward f = forward(model, w);
    const double d = f.output[0] - y;
    loss += d * d;
    const Tensor dout = Tensor::vector({2.0 * d / n});
    const Tensor dh = model.output.backward(f.hidden, f.output, dout, grad.output);
    const Tensor dx = model.hidden.backward(f.encoded.features, f.hidden, dh, grad.hidden);
    encode_sequence_backward(model.lstm, f.encoded, dx.values(), grad.lstm);
  }
  return loss / n;
}

void write_predictions_csv(std::ostream& os, std::span<const PredictionRow> rows) {
  os << "t,node,p_fail,predicted\n";
  const auto old = os.precision(17);
  for (const auto& r : rows) {
    os << r.t << ',' << r.node << ',' << r.p_fail << ',' << (r.predicted ? 1 : 0) << '\n';
  }
  os.precision(old);
}

}  // namespace fdsh
