// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "fdsh/errors.hpp"
#include "fdsh/healer.hpp"

namespace fdsh {
namespace {

std::size_t action_index(RecoveryAction a) noexcept { return static_cast<std::size_t>(a); }

void check_state(std::size_t s) {
  if (s >= kStateCount) throw InputError("agent state index " + std::to_string(s) + " out of range");
}

std::size_t argmax_row(const Tensor& q, std::size_t s) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < kActionCount; ++a) {
    if (q.at(s, a) > q.at(s, best)) best = a;
  }
  return best;
}

void check_table(const Tensor& q) { require_shape(q, {kStateCount, kActionCount}, "Q table"); }

}  // namespace

std::size_t AgentState::index() const noexcept {
  return ((alarm ? 1u : 0u) * kClassCount + class_index(dominant)) * kNodeStatusCount +
         static_cast<std::size_t>(worst);
}

AgentState AgentState::from_index(std::size_t index) {
  check_state(index);
  AgentState s;
  s.worst = static_cast<NodeStatus>(index % kNodeStatusCount);
  index /= kNodeStatusCount;
  s.dominant = class_fault(index % kClassCount);
  s.alarm = index / kClassCount != 0;
  return s;
}

void QConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("q-learning: alpha must be in (0,1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("q-learning: gamma must be in [0,1)");
}

QTable::QTable(QConfig cfg) : QTable(cfg, Tensor::zeros(kStateCount, kActionCount)) {}

QTable::QTable(QConfig cfg, Tensor values) : cfg_(cfg), q_(std::move(values)) {
  cfg_.validate();
  check_table(q_);
}

double QTable::value(std::size_t s, RecoveryAction a) const {
  check_state(s);
  return q_.at(s, action_index(a));
}

void QTable::set(std::size_t s, RecoveryAction a, double v) {
  check_state(s);
  q_.at(s, action_index(a)) = v;
}

double QTable::max_value(std::size_t s) const {
  check_state(s);
  return q_.at(s, argmax_row(q_, s));
}

double q_update(QTable& table, std::size_t s, RecoveryAction a, double r, std::size_t s_next) {
  const double delta = r + table.config().gamma * table.max_value(s_next) - table.value(s, a);
  table.set(s, a, table.value(s, a) + table.config().alpha * delta);
  return delta;
}

RecoveryAction greedy_action(const QTable& table, std::size_t s) {
  check_state(s);
  return static_cast<RecoveryAction>(argmax_row(table.values(), s));
}

RecoveryAction select_action(const QTable& table, std::size_t s, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in [0,1]");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Both draws are always taken so the stream does not depend on epsilon.
  const double explore = u(rng);
  const auto random_action =
      static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(0, kActionCount - 1)(rng));
  if (explore < epsilon) return static_cast<RecoveryAction>(random_action);
  return greedy_action(table, s);
}

double td_loss(const Tensor& q, double gamma, std::span<const Transition> transitions) {
  check_table(q);
  if (transitions.empty()) throw InputError("td_loss: no transitions");
  double sum = 0.0;
  for (const auto& tr : transitions) {
    check_state(tr.s);
    check_state(tr.s_next);
    const double delta =
        tr.r + gamma * q.at(tr.s_next, argmax_row(q, tr.s_next)) - q.at(tr.s, action_index(tr.a));
    sum += delta * delta;
  }
  return sum / static_cast<double>(transitions.size());
}

double td_loss_grad(const Tensor& q, double gamma, std::span<const Transition> transitions,
                    Tensor& grad) {
  check_table(q);
  check_table(grad);
  if (transitions.empty()) throw InputError("td_loss: no transitions");
  const double n = static_cast<double>(transitions.size());
  double sum = 0.0;
  for (const auto& tr : transitions) {
    check_state(tr.s);
    check_state(tr.s_next);
    const std::size_t best = argmax_row(q, tr.s_next);
    const double delta = tr.r + gamma * q.at(tr.s_next, best) - q.at(tr.s, action_index(tr.a));
    sum += delta * delta;
    grad.at(tr.s_next, best) += 2.0 * delta * gamma / n;
    grad.at(tr.s, action_index(tr.a)) -= 2.0 * delta / n;
  }
  return sum / n;
}

}  // namespace fdsh
