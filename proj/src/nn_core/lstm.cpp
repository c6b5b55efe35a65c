// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "fdsh/errors.hpp"
#include "fdsh/kernels.hpp"
#include "fdsh/nn.hpp"

namespace fdsh {
namespace {

// z = W_x x + W_h h + b, then gate activations in place.
void gate_activations(const LstmCellParams& p, std::span<const double> x,
                      std::span<const double> h, std::span<double> gates) {
  const std::size_t hidden = p.hidden_dim();
  kernels::gemv(p.w_x.values(), x, gates);
  std::vector<double> rec(4 * hidden);
  kernels::gemv(p.w_h.values(), h, rec);
  for (std::size_t k = 0; k < 4 * hidden; ++k) {
    const double z = gates[k] + rec[k] + p.b_h[k];
    gates[k] = (k >= 2 * hidden && k < 3 * hidden) ? std::tanh(z) : sigmoid(z);
  }
}

void cell_update(std::span<const double> gates, std::span<const double> c_prev,
                 std::span<double> c, std::span<double> h) {
  const std::size_t hidden = c.size();
  for (std::size_t j = 0; j < hidden; ++j) {
    const double i = gates[j];
    const double f = gates[hidden + j];
    const double g = gates[2 * hidden + j];
    const double o = gates[3 * hidden + j];
    c[j] = f * c_prev[j] + i * g;
    h[j] = o * std::tanh(c[j]);
  }
}

}  // namespace

LstmCellParams LstmCellParams::zeros(std::size_t input, std::size_t hidden) {
  return {Tensor::zeros(4 * hidden, input), Tensor::zeros(4 * hidden, hidden),
          Tensor::zeros(4 * hidden)};
}

LstmCellParams LstmCellParams::init(std::size_t input, std::size_t hidden, Rng& rng) {
  LstmCellParams p = zeros(input, hidden);
  const double bx = 1.0 / std::sqrt(static_cast<double>(input));
  const double bh = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> dx(-bx, bx);
  std::uniform_real_distribution<double> dh(-bh, bh);
  for (double& v : p.w_x.values()) v = dx(rng);
  for (double& v : p.w_h.values()) v = dh(rng);
  return p;
}

void LstmCellParams::validate() const {
  if (w_h.rank() != 2 || w_h.rows() != 4 * w_h.cols()) {
    throw ShapeError("lstm W_h must be (4*hidden, hidden), got " + shape_string(w_h.dims()));
  }
  const std::size_t hidden = w_h.cols();
  if (w_x.rank() != 2 || w_x.rows() != 4 * hidden) {
    throw ShapeError("lstm W_x must be (4*hidden, input), got " + shape_string(w_x.dims()));
  }
  require_shape(b_h, {4 * hidden}, "lstm bias");
}

LstmState lstm_step(const LstmCellParams& params, const LstmState& state, const Tensor& x_t) {
  params.validate();
  const std::size_t hidden = params.hidden_dim();
  require_shape(x_t, {params.input_dim()}, "lstm input");
  require_shape(state.h, {hidden}, "lstm hidden state");
  require_shape(state.c, {hidden}, "lstm cell state");
  std::vector<double> gates(4 * hidden);
  gate_activations(params, x_t.values(), state.h.values(), gates);
  LstmState next = LstmState::zeros(hidden);
  cell_update(gates, state.c.values(), next.c.values(), next.h.values());
  return next;
}

LstmTrace lstm_forward(const LstmCellParams& params, const Tensor& sequence) {
  params.validate();
  if (sequence.rank() != 2 || sequence.cols() != params.input_dim()) {
    throw ShapeError("lstm sequence must be (steps, " + std::to_string(params.input_dim()) +
                     "), got " + shape_string(sequence.dims()));
  }
  const std::size_t steps = sequence.rows();
  const std::size_t hidden = params.hidden_dim();
  LstmTrace tr;
  tr.steps = steps;
  tr.hidden = hidden;
  tr.inputs = sequence;
  tr.gates = Tensor::zeros(steps, 4 * hidden);
  tr.cells = Tensor::zeros(steps + 1, hidden);
  tr.hiddens = Tensor::zeros(steps + 1, hidden);
  for (std::size_t t = 0; t < steps; ++t) {
    gate_activations(params, sequence.row(t), tr.hiddens.row(t), tr.gates.row(t));
    cell_update(tr.gates.row(t), tr.cells.row(t), tr.cells.row(t + 1), tr.hiddens.row(t + 1));
  }
  return tr;
}

void lstm_backward(const LstmCellParams& params, const LstmTrace& trace,
                   std::span<const double> d_final_hidden, LstmCellParams& grad) {
  const std::size_t hidden = trace.hidden;
  if (d_final_hidden.size() != hidden) throw ShapeError("lstm hidden gradient size mismatch");
  std::vector<double> dh(d_final_hidden.begin(), d_final_hidden.end());
  std::vector<double> dc_next(hidden, 0.0);
  std::vector<double> dz(4 * hidden);
  for (std::size_t step = trace.steps; step-- > 0;) {
    const auto gates = trace.gates.row(step);
    const auto c = trace.cells.row(step + 1);
    const auto c_prev = trace.cells.row(step);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double i = gates[j];
      const double f = gates[hidden + j];
      const double g = gates[2 * hidden + j];
      const double o = gates[3 * hidden + j];
      const double tc = std::tanh(c[j]);
      const double d_o = dh[j] * tc;
      const double d_c = dc_next[j] + dh[j] * o * (1.0 - tc * tc);
      dz[j] = d_c * g * i * (1.0 - i);
      dz[hidden + j] = d_c * c_prev[j] * f * (1.0 - f);
      dz[2 * hidden + j] = d_c * i * (1.0 - g * g);
      dz[3 * hidden + j] = d_o * o * (1.0 - o);
      dc_next[j] = d_c * f;
    }
    kernels::ger_acc(dz, trace.inputs.row(step), grad.w_x.values());
    kernels::ger_acc(dz, trace.hiddens.row(step), grad.w_h.values());
    kernels::axpy(1.0, dz, grad.b_h.values());
    std::fill(dh.begin(), dh.end(), 0.0);
    kernels::gemv_t_acc(params.w_h.values(), dz, dh);
  }
}

}  // namespace fdsh
