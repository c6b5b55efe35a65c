// SPDX-License-Identifier: Apache-2.0
#pragma once

// Self-healing agent: tabular Q-learning over a compact alarm/class/status
// state, acting on the simulated cluster one recovery command per tick.

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fdsh/cluster_sim.hpp"
#include "fdsh/detectors.hpp"
#include "fdsh/rng.hpp"
#include "fdsh/tensor.hpp"

namespace fdsh {

struct AgentState {
  bool alarm = false;
  std::optional<FaultClass> dominant;  // SVM class of the most anomalous flagged node
  NodeStatus worst = NodeStatus::Healthy;

  std::size_t index() const noexcept;
  static AgentState from_index(std::size_t index);
  bool operator==(const AgentState&) const = default;
};
inline constexpr std::size_t kStateCount = 2 * kClassCount * kNodeStatusCount;

struct QConfig {
  double alpha = 0.2;
  double gamma = 0.9;
  void validate() const;
};

class QTable {
 public:
  explicit QTable(QConfig cfg = {});
  QTable(QConfig cfg, Tensor values);  // values is (kStateCount, kActionCount)

  const QConfig& config() const noexcept { return cfg_; }
  double value(std::size_t s, RecoveryAction a) const;
  void set(std::size_t s, RecoveryAction a, double v);
  double max_value(std::size_t s) const;
  const Tensor& values() const noexcept { return q_; }

 private:
  QConfig cfg_;
  Tensor q_;
};

/// Q(s,a) += alpha * delta with delta = r + gamma * max_a' Q(s',a') - Q(s,a).
/// Returns delta.
double q_update(QTable& table, std::size_t s, RecoveryAction a, double r, std::size_t s_next);

/// Argmax over actions, ties to the lowest action index.
RecoveryAction greedy_action(const QTable& table, std::size_t s);
/// Uniform action with probability epsilon, greedy otherwise.
RecoveryAction select_action(const QTable& table, std::size_t s, double epsilon, Rng& rng);

struct Transition {
  std::size_t s = 0;
  RecoveryAction a = RecoveryAction::NoOp;
  double r = 0.0;
  std::size_t s_next = 0;
};

/// Mean squared TD error of the transitions under a fixed value table.
double td_loss(const Tensor& q, double gamma, std::span<const Transition> transitions);
/// Same, accumulating dL/dQ (the bootstrap target is differentiated too,
/// through the lowest-index maximizer).
double td_loss_grad(const Tensor& q, double gamma, std::span<const Transition> transitions,
                    Tensor& grad);

// ---- observation ----

struct Observation {
  AgentState state;
  int target = 0;                  // node a non-NoOp action is applied to
  std::vector<int> flagged_nodes;  // nodes the observer currently alarms on
};

class Observer {
 public:
  virtual ~Observer() = default;
  virtual void reset() = 0;
  /// Called after each tick with that tick's observations.
  virtual Observation observe(const Simulation& sim, const StepResult& step) = 0;
  /// The state before the first tick.
  virtual Observation initial(const Simulation& sim) const;
};

/// Reads ground truth: every faulted node that is not under repair is flagged
/// with its true class.
class OracleObserver final : public Observer {
 public:
  void reset() override {}
  Observation observe(const Simulation& sim, const StepResult& step) override;
};

/// Runs the trained detector stack over a rolling per-node window. No alarm is
/// raised until a node's buffer holds a full window.
class DetectorObserver final : public Observer {
 public:
  explicit DetectorObserver(const DetectorStack& stack);
  void reset() override;
  Observation observe(const Simulation& sim, const StepResult& step) override;

 private:
  const DetectorStack& stack_;
  std::vector<std::deque<TelemetrySample>> telemetry_;
  std::vector<std::deque<LogRecord>> logs_;
};

// ---- episodes ----

enum class PolicyMode { EpsilonGreedy, AlwaysNoOp };

struct EpisodeConfig {
  std::int64_t horizon = 200;
  double epsilon = 0.0;
  bool learn = true;
  PolicyMode policy = PolicyMode::EpsilonGreedy;
};

struct EpisodeStep {
  std::int64_t t = 0;
  AgentState state;  // state the action was chosen in
  RecoveryAction action = RecoveryAction::NoOp;
  int target = 0;
  int reward = 0;
};

struct EpisodeResult {
  int cumulative_reward = 0;
  double td_loss = 0.0;  // mean squared TD error over the episode
  double mean_recovery_ticks = 0.0;  // 0 when no fault occurred
  std::size_t recovery_episodes = 0;
  double stability = 1.0;  // fraction of ticks without a failed node
  std::vector<EpisodeStep> steps;
  std::vector<Event> events;
};

/// Steps `sim` for cfg.horizon ticks (clipped at the simulator's own horizon).
/// Flagged nodes carrying a fault are reported to the simulator as detected.
EpisodeResult run_episode(Simulation& sim, Observer& observer, QTable& table,
                          const EpisodeConfig& cfg, Rng& rng);

/// Mean recovery ticks and stability computed from an event log.
double mean_recovery_ticks(const std::vector<Event>& events, std::int64_t horizon,
                           std::size_t* count = nullptr);
double stability(const std::vector<Event>& events);

/// {"ep","t","state":[alarm,class,status],"action","reward"} per step.
void write_episode_log_jsonl(std::ostream& os, int episode, const EpisodeResult& result);
/// episode,cum_reward,td_loss,mean_recovery_ticks
void write_episode_summary_csv(std::ostream& os, std::span<const EpisodeResult> results);

struct EpisodeSummary {
  int episode = 0;
  int cum_reward = 0;
  double td_loss = 0.0;
  double mean_recovery_ticks = 0.0;
};
std::vector<EpisodeSummary> read_episode_summary_csv(std::istream& is);

}  // namespace fdsh
