// SPDX-License-Identifier: Apache-2.0
#include "fdsh/detectors.hpp"
#include "fdsh/errors.hpp"
#include "fdsh/kernels.hpp"

namespace fdsh {
namespace {

void check_batch(const SvmModel& model, std::span<const Tensor> xs,
                 std::span<const std::size_t> labels) {
  if (xs.empty()) throw InputError("svm_loss: empty batch");
  if (xs.size() != labels.size()) throw InputError("svm_loss: feature/label count mismatch");
  if (!(model.C > 0.0)) throw ConfigError("svm: C must be > 0");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require_shape(xs[i], {model.dim()}, "svm feature");
    if (labels[i] >= model.classes()) {
      throw InputError("svm_loss: label " + std::to_string(labels[i]) + " out of range");
    }
  }
}

}  // namespace

std::size_t class_index(std::optional<FaultClass> fault) noexcept {
  return fault ? static_cast<std::size_t>(*fault) + 1 : 0;
}

std::optional<FaultClass> class_fault(std::size_t index) {
  if (index >= kClassCount) throw InputError("class index out of range");
  if (index == 0) return std::nullopt;
  return static_cast<FaultClass>(index - 1);
}

std::string_view class_name(std::size_t index) {
  const auto f = class_fault(index);
  return f ? to_string(*f) : std::string_view("Healthy");
}

std::optional<std::size_t> parse_class_name(std::string_view name) noexcept {
  if (name == "Healthy") return 0;
  if (const auto f = parse_fault_class(name)) return class_index(f);
  return std::nullopt;
}

SvmModel SvmModel::zeros(std::size_t classes, std::size_t dim, double C) {
  return {Tensor::zeros(classes, dim), Tensor::zeros(classes), C};
}

double svm_loss(const SvmModel& model, std::span<const Tensor> xs,
                std::span<const std::size_t> labels, double regularizer_share) {
  check_batch(model, xs, labels);
  double loss = regularizer_share * 0.5 * kernels::sum_squares(model.weights.values());
  for (std::size_t c = 0; c < model.classes(); ++c) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double y = labels[i] == c ? 1.0 : -1.0;
      const double margin = y * (kernels::dot(model.weights.row(c), xs[i].values()) + model.bias[c]);
      if (margin < 1.0) loss += model.C * (1.0 - margin);
    }
  }
  return loss;
}

double svm_loss_grad(const SvmModel& model, std::span<const Tensor> xs,
                     std::span<const std::size_t> labels, SvmModel& grad,
                     std::vector<Tensor>* dxs, double regularizer_share) {
  check_batch(model, xs, labels);
  if (dxs != nullptr) dxs->assign(xs.size(), Tensor::zeros(model.dim()));
  double loss = regularizer_share * 0.5 * kernels::sum_squares(model.weights.values());
  kernels::axpy(regularizer_share, model.weights.values(), grad.weights.values());
  for (std::size_t c = 0; c < model.classes(); ++c) {
    const auto w = model.weights.row(c);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double y = labels[i] == c ? 1.0 : -1.0;
      const double margin = y * (kernels::dot(w, xs[i].values()) + model.bias[c]);
      if (margin >= 1.0) continue;
      loss += model.C * (1.0 - margin);
      const double g = -model.C * y;
      kernels::axpy(g, xs[i].values(), grad.weights.row(c));
      grad.bias[c] += g;
      if (dxs != nullptr) kernels::axpy(g, w, (*dxs)[i].values());
    }
  }
  return loss;
}

SvmDecision svm_classify(const SvmModel& model, const Tensor& x) {
  require_shape(x, {model.dim()}, "svm feature");
  SvmDecision d;
  d.scores.resize(model.classes());
  for (std::size_t c = 0; c < model.classes(); ++c) {
    d.scores[c] = kernels::dot(model.weights.row(c), x.values()) + model.bias[c];
    if (d.scores[c] > d.scores[d.label]) d.label = c;
  }
  return d;
}

}  // namespace fdsh
