// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "fdsh/cluster_sim.hpp"
#include "fdsh/errors.hpp"

namespace fdsh {
namespace {

constexpr Metrics kHealthyMean{0.30, 0.40, 0.20, 0.15, 0.02};
constexpr double kNoiseSigma = 0.05;
constexpr double kInfoRateHealthy = 0.6;
constexpr double kInfoRateFaulted = 0.3;
constexpr int kMaintenanceTemplate = 7;

enum Metric : std::size_t { kCpu, kMem, kDisk, kNet, kErr };

struct Signature {
  Metrics offset{};
  double cpu_floor = 0.0;
  bool err_pinned = false;  // error_rate forced to 1.0
};

Signature signature(FaultClass c) {
  switch (c) {
    case FaultClass::CpuSaturation:
      return {{0.65, 0.0, 0.0, 0.10, 0.0}, 0.9, false};
    case FaultClass::MemoryLeak:
      return {{0.10, 0.45, 0.0, 0.0, 0.0}, 0.0, false};
    case FaultClass::ServiceCrash:
      return {{-0.20, 0.0, 0.0, 0.0, 0.0}, 0.0, true};
    case FaultClass::NetworkPartition:
      return {{0.0, 0.0, 0.0, 0.70, 0.30}, 0.0, false};
    case FaultClass::DiskFailure:
      return {{0.0, 0.0, 0.60, 0.0, 0.20}, 0.0, false};
  }
  return {};
}

// A service disrupted by an unnecessary action: errors up, load down.
constexpr Metrics kDamageOffset{-0.10, 0.0, 0.0, 0.0, 0.25};

}  // namespace

std::string_view to_string(FaultClass c) noexcept {
  switch (c) {
    case FaultClass::CpuSaturation:
      return "CpuSaturation";
    case FaultClass::MemoryLeak:
      return "MemoryLeak";
    case FaultClass::ServiceCrash:
      return "ServiceCrash";
    case FaultClass::NetworkPartition:
      return "NetworkPartition";
    case FaultClass::DiskFailure:
      return "DiskFailure";
  }
  return "?";
}

std::string_view to_string(NodeStatus s) noexcept {
  switch (s) {
    case NodeStatus::Healthy:
      return "Healthy";
    case NodeStatus::Degraded:
      return "Degraded";
    case NodeStatus::Failed:
      return "Failed";
  }
  return "?";
}

std::string_view to_string(RecoveryAction a) noexcept {
  switch (a) {
    case RecoveryAction::NoOp:
      return "NoOp";
    case RecoveryAction::RestartService:
      return "RestartService";
    case RecoveryAction::ReallocateResources:
      return "ReallocateResources";
    case RecoveryAction::ApplyPatch:
      return "ApplyPatch";
  }
  return "?";
}

std::string_view to_string(Severity s) noexcept {
  switch (s) {
    case Severity::Info:
      return "INFO";
    case Severity::Warn:
      return "WARN";
    case Severity::Error:
      return "ERROR";
  }
  return "?";
}

std::optional<FaultClass> parse_fault_class(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kFaultClassCount; ++i) {
    const auto c = static_cast<FaultClass>(i);
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::optional<RecoveryAction> parse_action(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kActionCount; ++i) {
    const auto a = static_cast<RecoveryAction>(i);
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

std::optional<Severity> parse_severity(std::string_view s) noexcept {
  for (auto v : {Severity::Info, Severity::Warn, Severity::Error}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

RecoveryAction curing_action(FaultClass c) noexcept {
  switch (c) {
    case FaultClass::CpuSaturation:
    case FaultClass::NetworkPartition:
      return RecoveryAction::ReallocateResources;
    case FaultClass::MemoryLeak:
    case FaultClass::ServiceCrash:
      return RecoveryAction::RestartService;
    case FaultClass::DiskFailure:
      return RecoveryAction::ApplyPatch;
  }
  return RecoveryAction::NoOp;
}

int action_latency(RecoveryAction a) noexcept {
  switch (a) {
    case RecoveryAction::NoOp:
      return 0;
    case RecoveryAction::RestartService:
      return 3;
    case RecoveryAction::ReallocateResources:
      return 2;
    case RecoveryAction::ApplyPatch:
      return 5;
  }
  return 0;
}

int recovery_window(RecoveryAction a) noexcept { return action_latency(a) + 2; }

NodeStatus fault_status(FaultClass c) noexcept {
  switch (c) {
    case FaultClass::CpuSaturation:
    case FaultClass::MemoryLeak:
      return NodeStatus::Degraded;
    case FaultClass::ServiceCrash:
    case FaultClass::NetworkPartition:
    case FaultClass::DiskFailure:
      return NodeStatus::Failed;
  }
  return NodeStatus::Failed;
}

const std::vector<std::string>& template_tokens(int template_id) {
  static const std::vector<std::vector<std::string>> kTemplates{
      {"heartbeat", "ok", "node", "alive"},
      {"request", "served", "latency", "nominal"},
      {"cpu", "usage", "saturated", "throttling", "scheduler"},
      {"memory", "pressure", "heap", "growing", "leak", "suspected"},
      {"service", "process", "crashed", "exit", "code", "segfault"},
      {"network", "unreachable", "peer", "timeout", "partition"},
      {"disk", "io", "error", "sector", "read", "failure"},
      {"maintenance", "action", "in", "progress"},
  };
  if (template_id < 0 || template_id >= kTemplateCount) {
    throw InputError("unknown log template " + std::to_string(template_id));
  }
  return kTemplates[static_cast<std::size_t>(template_id)];
}

int fault_template(FaultClass c) noexcept { return 2 + static_cast<int>(c); }

std::string LogRecord::message() const {
  std::string msg;
  for (const auto& tok : tokens) {
    if (!msg.empty()) msg += ' ';
    msg += tok;
  }
  return msg;
}

void SimConfig::validate() const {
  if (nodes < 1) throw ConfigError("sim: nodes must be >= 1");
  if (ticks < 1) throw ConfigError("sim: ticks must be >= 1");
  if (!(fault_rate >= 0.0 && fault_rate < 1.0)) throw ConfigError("sim: fault_rate must be in [0,1)");
}

Simulation::Simulation(const SimConfig& config, std::uint64_t seed)
    : config_(config),
      fault_rng_(derive_seed(seed, 1)),
      noise_rng_(derive_seed(seed, 2)),
      log_rng_(derive_seed(seed, 3)) {
  config_.validate();
  nodes_.resize(static_cast<std::size_t>(config_.nodes));
  for (int i = 0; i < config_.nodes; ++i) nodes_[static_cast<std::size_t>(i)].node_id = i;
  detected_.assign(nodes_.size(), false);
}

const NodeState& Simulation::node(int id) const {
  if (id < 0 || id >= config_.nodes) throw InputError("node id out of range: " + std::to_string(id));
  return nodes_[static_cast<std::size_t>(id)];
}

bool Simulation::all_healthy() const noexcept {
  return std::all_of(nodes_.begin(), nodes_.end(),
                     [](const NodeState& n) { return n.status == NodeStatus::Healthy; });
}

int Simulation::failed_count() const noexcept {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const NodeState& n) {
    return n.status == NodeStatus::Failed;
  }));
}

void Simulation::start_fault(NodeState& n, FaultClass fault) {
  n.active_fault = fault;
  n.status = fault_status(fault);
  n.fault_age = 0;
  detected_[static_cast<std::size_t>(n.node_id)] = false;
  events_.push_back({tick_, n.node_id, EventKind::Inject, fault, RecoveryAction::NoOp, 0});
}

void Simulation::inject_fault(int node_id, FaultClass fault) {
  node(node_id);
  NodeState& n = nodes_[static_cast<std::size_t>(node_id)];
  if (n.status != NodeStatus::Healthy) {
    throw StateError("inject_fault: node " + std::to_string(node_id) + " is not healthy");
  }
  start_fault(n, fault);
}

void Simulation::mark_detected(int node_id) {
  node(node_id);
  const auto idx = static_cast<std::size_t>(node_id);
  const NodeState& n = nodes_[idx];
  if (!n.active_fault || detected_[idx]) return;
  detected_[idx] = true;
  events_.push_back({tick_ - 1, node_id, EventKind::Detect, n.active_fault, RecoveryAction::NoOp, 0});
}

void Simulation::progress_repairs() {
  for (NodeState& n : nodes_) {
    if (n.repair_countdown == 0) continue;
    if (--n.repair_countdown > 0) continue;
    if (n.repair_cures && n.active_fault) {
      events_.push_back({tick_, n.node_id, EventKind::Healthy, n.active_fault, RecoveryAction::NoOp, 0});
      n.active_fault.reset();
      n.fault_age = 0;
    }
    n.repair_cures = false;
    n.status = n.active_fault ? fault_status(*n.active_fault) : NodeStatus::Healthy;
  }
}

ActionOutcome Simulation::apply(const Command& command) {
  if (command.action == RecoveryAction::NoOp) return ActionOutcome::Idle;
  node(command.node);
  NodeState& n = nodes_[static_cast<std::size_t>(command.node)];
  if (n.repair_in_flight()) return ActionOutcome::Idle;
  events_.push_back({tick_, n.node_id, EventKind::Action, n.active_fault, command.action, 0});
  n.repair_countdown = action_latency(command.action);
  if (n.active_fault) {
    n.repair_cures = curing_action(*n.active_fault) == command.action;
    return n.repair_cures ? ActionOutcome::Recovered : ActionOutcome::NotCured;
  }
  n.repair_cures = false;
  n.status = NodeStatus::Degraded;
  return ActionOutcome::Damage;
}

void Simulation::inject_random_faults() {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, static_cast<int>(kFaultClassCount) - 1);
  for (NodeState& n : nodes_) {
    // Both draws happen for every node so the stream stays aligned across
    // runs that differ only in the actions taken.
    const double u = unit(fault_rng_);
    const auto fault = static_cast<FaultClass>(cls(fault_rng_));
    if (u < config_.fault_rate && n.status == NodeStatus::Healthy && !n.repair_in_flight()) {
      start_fault(n, fault);
    }
  }
}

Metrics Simulation::sample_metrics(const NodeState& n) {
  std::normal_distribution<double> noise(0.0, kNoiseSigma);
  Metrics m = kHealthyMean;
  for (double& v : m) v += noise(noise_rng_);
  if (n.active_fault) {
    const Signature sig = signature(*n.active_fault);
    for (std::size_t k = 0; k < kMetricCount; ++k) m[k] += sig.offset[k];
    for (double& v : m) v = std::clamp(v, 0.0, 1.0);
    m[kCpu] = std::max(m[kCpu], sig.cpu_floor);
    if (sig.err_pinned) m[kErr] = 1.0;
    return m;
  }
  if (n.repair_in_flight()) {
    for (std::size_t k = 0; k < kMetricCount; ++k) m[k] += kDamageOffset[k];
  }
  for (double& v : m) v = std::clamp(v, 0.0, 1.0);
  return m;
}

void Simulation::emit_logs(const NodeState& n, std::vector<LogRecord>& out) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u_info = unit(log_rng_);
  const double u_pick = unit(log_rng_);
  auto push = [&](Severity sev, int tmpl) {
    out.push_back({tick_, n.node_id, sev, tmpl, template_tokens(tmpl)});
  };
  if (n.repair_in_flight()) push(Severity::Info, kMaintenanceTemplate);
  if (n.active_fault) {
    const FaultClass c = *n.active_fault;
    const bool warn = c == FaultClass::CpuSaturation || c == FaultClass::MemoryLeak;
    push(warn ? Severity::Warn : Severity::Error, fault_template(c));
  }
  const double rate = n.active_fault ? kInfoRateFaulted : kInfoRateHealthy;
  if (u_info < rate) push(Severity::Info, u_pick < 0.5 ? 0 : 1);
}

StepResult Simulation::step(const Command& command) {
  if (finished()) throw StateError("step: simulation horizon reached");
  StepResult out;
  out.t = tick_;
  progress_repairs();
  out.outcome = apply(command);
  out.reward = reward(out.outcome);
  inject_random_faults();
  for (NodeState& n : nodes_) {
    if (n.active_fault) ++n.fault_age;
    out.telemetry.push_back({tick_, n.node_id, sample_metrics(n)});
    emit_logs(n, out.logs);
    out.labels.push_back({tick_, n.node_id, n.active_fault});
  }
  events_.push_back({tick_, -1, EventKind::Tick, std::nullopt, RecoveryAction::NoOp, failed_count()});
  ++tick_;
  return out;
}

std::vector<RecoveryEpisode> recovery_time(const std::vector<Event>& events, std::int64_t horizon) {
  std::vector<RecoveryEpisode> done;
  std::vector<std::optional<RecoveryEpisode>> open;
  auto slot = [&](int node) -> std::optional<RecoveryEpisode>& {
    if (node < 0) throw ParseError("event without a node id");
    if (static_cast<std::size_t>(node) >= open.size()) open.resize(static_cast<std::size_t>(node) + 1);
    return open[static_cast<std::size_t>(node)];
  };
  for (const Event& e : events) {
    switch (e.kind) {
      case EventKind::Inject: {
        auto& ep = slot(e.node);
        if (ep) throw ParseError("second inject on node " + std::to_string(e.node) + " at t=" + std::to_string(e.t));
        if (!e.fault) throw ParseError("inject event without a fault class");
        ep = RecoveryEpisode{e.node, *e.fault, e.t, std::nullopt, std::nullopt, 0, false};
        break;
      }
      case EventKind::Detect: {
        auto& ep = slot(e.node);
        if (!ep) throw ParseError("detect without an open fault on node " + std::to_string(e.node));
        if (!ep->detected) ep->detected = e.t;
        break;
      }
      case EventKind::Healthy: {
        auto& ep = slot(e.node);
        if (!ep) throw ParseError("healthy without an open fault on node " + std::to_string(e.node));
        ep->healthy = e.t;
        ep->ticks = e.t - ep->detected.value_or(ep->injected);
        done.push_back(*ep);
        ep.reset();
        break;
      }
      case EventKind::Action:
      case EventKind::Tick:
        break;
    }
  }
  for (auto& ep : open) {
    if (!ep) continue;
    ep->censored = true;
    ep->ticks = horizon;
    done.push_back(*ep);
  }
  return done;
}

}  // namespace fdsh
