// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic tick-driven simulation of a small cloud cluster: seeded fault
// injection, class-specific telemetry and log signatures, recovery actions
// with fixed latencies, and an event log for recovery-time accounting.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fdsh/reward.hpp"
#include "fdsh/rng.hpp"

namespace fdsh {

enum class FaultClass : std::uint8_t {
  CpuSaturation,
  MemoryLeak,
  ServiceCrash,
  NetworkPartition,
  DiskFailure,
};
inline constexpr std::size_t kFaultClassCount = 5;

enum class NodeStatus : std::uint8_t { Healthy, Degraded, Failed };
inline constexpr std::size_t kNodeStatusCount = 3;

enum class RecoveryAction : std::uint8_t {
  NoOp,
  RestartService,
  ReallocateResources,
  ApplyPatch,
};
inline constexpr std::size_t kActionCount = 4;

enum class Severity : std::uint8_t { Info, Warn, Error };

inline constexpr std::size_t kMetricCount = 5;
using Metrics = std::array<double, kMetricCount>;  // cpu, mem, disk_io, net_latency, error_rate

std::string_view to_string(FaultClass c) noexcept;
std::string_view to_string(NodeStatus s) noexcept;
std::string_view to_string(RecoveryAction a) noexcept;
std::string_view to_string(Severity s) noexcept;
std::optional<FaultClass> parse_fault_class(std::string_view s) noexcept;
std::optional<RecoveryAction> parse_action(std::string_view s) noexcept;
std::optional<Severity> parse_severity(std::string_view s) noexcept;

// Remedy table: every fault class has exactly one curing action.
RecoveryAction curing_action(FaultClass c) noexcept;
int action_latency(RecoveryAction a) noexcept;  // ticks; 0 for NoOp
int recovery_window(RecoveryAction a) noexcept; // latency + 2
NodeStatus fault_status(FaultClass c) noexcept;

struct NodeState {
  int node_id = 0;
  NodeStatus status = NodeStatus::Healthy;
  std::optional<FaultClass> active_fault;
  int fault_age = 0;
  int repair_countdown = 0;
  // Private bookkeeping for the in-flight repair.
  bool repair_cures = false;

  bool repair_in_flight() const noexcept { return repair_countdown > 0; }
};

struct TelemetrySample {
  std::int64_t t = 0;
  int node = 0;
  Metrics metrics{};
};

struct LogRecord {
  std::int64_t t = 0;
  int node = 0;
  Severity severity = Severity::Info;
  int template_id = 0;
  std::vector<std::string> tokens;

  std::string message() const;
};

struct LabelRecord {
  std::int64_t t = 0;
  int node = 0;
  std::optional<FaultClass> fault;
};

/// Fixed log templates: ids 0, 1 and 7 are informational, 2..6 belong to the
/// fault classes in enum order.
inline constexpr int kTemplateCount = 8;
const std::vector<std::string>& template_tokens(int template_id);
int fault_template(FaultClass c) noexcept;

enum class EventKind : std::uint8_t { Inject, Detect, Action, Healthy, Tick };

struct Event {
  std::int64_t t = 0;
  int node = -1;
  EventKind kind = EventKind::Tick;
  std::optional<FaultClass> fault;
  RecoveryAction action = RecoveryAction::NoOp;
  int failed_nodes = 0;  // Tick events only
};

struct SimConfig {
  int nodes = 4;
  std::int64_t ticks = 1500;  // horizon
  double fault_rate = 0.03;   // per healthy node per tick

  void validate() const;
};

struct Command {
  RecoveryAction action = RecoveryAction::NoOp;
  int node = 0;
};

struct StepResult {
  std::int64_t t = 0;
  std::vector<TelemetrySample> telemetry;
  std::vector<LogRecord> logs;
  std::vector<LabelRecord> labels;
  ActionOutcome outcome = ActionOutcome::Idle;
  int reward = 0;
};

class Simulation {
 public:
  Simulation(const SimConfig& config, std::uint64_t seed);

  /// Advances one tick. Order within a tick: in-flight repairs progress,
  /// the command is applied, faults are injected, observations are emitted.
  StepResult step(const Command& command);

  /// Puts a healthy node into `fault`; its signature shows from the next tick.
  void inject_fault(int node, FaultClass fault);

  /// Records the first detection of the node's current fault episode.
  void mark_detected(int node);

  const SimConfig& config() const noexcept { return config_; }
  const std::vector<NodeState>& nodes() const noexcept { return nodes_; }
  const NodeState& node(int id) const;
  std::int64_t now() const noexcept { return tick_; }
  bool finished() const noexcept { return tick_ >= config_.ticks; }
  const std::vector<Event>& events() const noexcept { return events_; }
  bool all_healthy() const noexcept;
  int failed_count() const noexcept;

 private:
  void progress_repairs();
  ActionOutcome apply(const Command& command);
  void inject_random_faults();
  void start_fault(NodeState& n, FaultClass fault);
  Metrics sample_metrics(const NodeState& n);
  void emit_logs(const NodeState& n, std::vector<LogRecord>& out);

  SimConfig config_;
  std::int64_t tick_ = 0;
  std::vector<NodeState> nodes_;
  std::vector<bool> detected_;
  std::vector<Event> events_;
  Rng fault_rng_;
  Rng noise_rng_;
  Rng log_rng_;
};

/// Recovery accounting for one fault episode.
struct RecoveryEpisode {
  int node = 0;
  FaultClass fault = FaultClass::CpuSaturation;
  std::int64_t injected = 0;
  std::optional<std::int64_t> detected;
  std::optional<std::int64_t> healthy;
  std::int64_t ticks = 0;  // healthy - first detection (or injection when undetected)
  bool censored = false;   // unresolved at the horizon; ticks == horizon
};

/// Matches inject / detect / healthy events per node. Throws ParseError on a
/// detect or healthy event without an open episode, or on a double inject.
std::vector<RecoveryEpisode> recovery_time(const std::vector<Event>& events, std::int64_t horizon);

// ---- JSON-lines streams ----

void write_telemetry_jsonl(std::ostream& os, const std::vector<TelemetrySample>& samples);
void write_logs_jsonl(std::ostream& os, const std::vector<LogRecord>& records);
void write_labels_jsonl(std::ostream& os, const std::vector<LabelRecord>& labels);
void write_events_jsonl(std::ostream& os, const std::vector<Event>& events, int episode = -1);

std::vector<TelemetrySample> read_telemetry_jsonl(std::istream& is);
std::vector<LogRecord> read_logs_jsonl(std::istream& is);
std::vector<LabelRecord> read_labels_jsonl(std::istream& is);
/// Events grouped by their "ep" field (or a single group when absent).
std::vector<std::vector<Event>> read_events_jsonl(std::istream& is);

}  // namespace fdsh
