// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense and recurrent building blocks with hand-written backward passes, the
// plain SGD update and a central-difference gradient checker.

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "fdsh/rng.hpp"
#include "fdsh/tensor.hpp"

namespace fdsh {

enum class Activation { Identity, Sigmoid, Tanh, Relu };

/// Logistic function, kept strictly inside (0,1) even for saturated inputs.
double sigmoid(double z) noexcept;

/// activation(W x + b). W is (out, in), b is (out), x is (in).
Tensor dense_forward(const Tensor& w, const Tensor& b, const Tensor& x, Activation activation);

struct DenseLayer {
  Tensor weight;  // (out, in)
  Tensor bias;    // (out)
  Activation activation = Activation::Identity;

  /// Uniform(-1/sqrt(in), 1/sqrt(in)) weights, zero bias.
  static DenseLayer init(std::size_t in, std::size_t out, Activation act, Rng& rng);

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }

  Tensor forward(const Tensor& x) const { return dense_forward(weight, bias, x, activation); }

  /// Backpropagates dy (gradient w.r.t. the activated output y = forward(x)).
  /// Accumulates weight/bias gradients into `grad` and returns dL/dx.
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& dy, DenseLayer& grad) const;

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    f("weight", self.weight);
    f("bias", self.bias);
  }
};

// LSTM cell, gate blocks stacked in the order (input, forget, cell, output).
struct LstmCellParams {
  Tensor w_x;  // (4*hidden, input)
  Tensor w_h;  // (4*hidden, hidden)
  Tensor b_h;  // (4*hidden)

  static LstmCellParams zeros(std::size_t input, std::size_t hidden);
  static LstmCellParams init(std::size_t input, std::size_t hidden, Rng& rng);

  std::size_t input_dim() const noexcept { return w_x.cols(); }
  std::size_t hidden_dim() const noexcept { return w_h.cols(); }
  void validate() const;

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    f("w_x", self.w_x);
    f("w_h", self.w_h);
    f("b_h", self.b_h);
  }
};

struct LstmState {
  Tensor h;
  Tensor c;
  static LstmState zeros(std::size_t hidden) { return {Tensor::zeros(hidden), Tensor::zeros(hidden)}; }
};

LstmState lstm_step(const LstmCellParams& params, const LstmState& state, const Tensor& x_t);

/// Everything the backward pass needs from an unrolled forward run.
struct LstmTrace {
  std::size_t steps = 0;
  std::size_t hidden = 0;
  Tensor inputs;  // (steps, input)
  Tensor gates;   // (steps, 4*hidden), post-activation
  Tensor cells;   // (steps + 1, hidden), row 0 is the initial cell
  Tensor hiddens; // (steps + 1, hidden), row 0 is the initial hidden state

  std::span<const double> final_hidden() const { return hiddens.row(steps); }
};

/// Runs the cell over the rows of `sequence` (steps, input) from the zero state.
LstmTrace lstm_forward(const LstmCellParams& params, const Tensor& sequence);

/// Backpropagation through time from a gradient on the final hidden state.
/// Accumulates parameter gradients into `grad`.
void lstm_backward(const LstmCellParams& params, const LstmTrace& trace,
                   std::span<const double> d_final_hidden, LstmCellParams& grad);

struct SgdConfig {
  double eta = 0.01;
  double clip_norm = 5.0;  // global L2 norm cap; 0 disables clipping
};

/// theta - eta * g, where g is grad rescaled to norm clip_norm when larger.
Tensor sgd_step(const Tensor& theta, const Tensor& grad, const SgdConfig& cfg);

/// In-place update of several tensors sharing one global clipping norm.
/// Returns the pre-clipping global gradient norm.
double sgd_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
                const SgdConfig& cfg);

using ScalarFn = std::function<double(const Tensor&)>;

/// Central-difference gradient of `loss` at theta.
Tensor numeric_gradient(const ScalarFn& loss, const Tensor& theta, double eps);

/// Largest element-wise relative error between `analytic` and the central
/// difference estimate, |a - n| / max(|a| + |n|, 1e-6 * max(1, |loss(theta)|)).
double grad_check(const ScalarFn& loss, const Tensor& analytic, const Tensor& theta, double eps);

// ---- parameter-set helpers over any type with a static visit(Self&, F) ----

/// Forwards a sub-model's parameters to `f` with `prefix` prepended to names.
template <class Sub, class F>
void visit_prefixed(std::string_view prefix, Sub& sub, F& f) {
  std::remove_const_t<Sub>::visit(sub, [&](std::string_view name, auto& t) {
    std::string full(prefix);
    full += name;
    f(std::string_view(full), t);
  });
}

template <class Model>
std::vector<Tensor*> tensors_of(Model& m) {
  std::vector<Tensor*> out;
  Model::visit(m, [&](std::string_view, Tensor& t) { out.push_back(&t); });
  return out;
}

template <class Model>
std::vector<const Tensor*> tensors_of(const Model& m) {
  std::vector<const Tensor*> out;
  Model::visit(m, [&](std::string_view, const Tensor& t) { out.push_back(&t); });
  return out;
}

template <class Model>
std::vector<std::pair<std::string, const Tensor*>> named_tensors_of(const Model& m,
                                                                    std::string_view prefix) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  Model::visit(m, [&](std::string_view name, const Tensor& t) {
    out.emplace_back(std::string(prefix) + std::string(name), &t);
  });
  return out;
}

template <class Model>
Model zeros_like(const Model& m) {
  Model z = m;
  for (Tensor* t : tensors_of(z)) t->fill(0.0);
  return z;
}

Tensor flatten(std::span<const Tensor* const> parts);
void unflatten(const Tensor& flat, std::span<Tensor* const> parts);

template <class Model>
Tensor flatten_params(const Model& m) {
  const auto parts = tensors_of(m);
  return flatten(parts);
}

template <class Model>
void unflatten_params(const Tensor& flat, Model& m) {
  const auto parts = tensors_of(m);
  unflatten(flat, parts);
}

}  // namespace fdsh
