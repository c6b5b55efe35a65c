// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fdsh/errors.hpp"
#include "fdsh/healer.hpp"

namespace fdsh {
namespace {

NodeStatus worst_status(const Simulation& sim) {
  NodeStatus worst = NodeStatus::Healthy;
  for (const auto& n : sim.nodes()) worst = std::max(worst, n.status);
  return worst;
}

}  // namespace

Observation Observer::initial(const Simulation& sim) const {
  Observation o;
  o.state.worst = worst_status(sim);
  return o;
}

// ---- oracle ----

Observation OracleObserver::observe(const Simulation& sim, const StepResult&) {
  Observation o;
  o.state.worst = worst_status(sim);
  for (const auto& n : sim.nodes()) {
    if (!n.active_fault || n.repair_in_flight()) continue;
    if (!o.state.alarm) {
      o.state.alarm = true;
      o.state.dominant = n.active_fault;
      o.target = n.node_id;
    }
    o.flagged_nodes.push_back(n.node_id);
  }
  return o;
}

// ---- detector-driven ----

DetectorObserver::DetectorObserver(const DetectorStack& stack) : stack_(stack) {}

void DetectorObserver::reset() {
  telemetry_.clear();
  logs_.clear();
}

Observation DetectorObserver::observe(const Simulation& sim, const StepResult& step) {
  const auto nodes = static_cast<std::size_t>(sim.config().nodes);
  const std::size_t n = stack_.features.window;
  telemetry_.resize(nodes);
  logs_.resize(nodes);
  for (const auto& s : step.telemetry) {
    auto& buf = telemetry_.at(static_cast<std::size_t>(s.node));
    buf.push_back(s);
    if (buf.size() > n) buf.pop_front();
  }
  for (const auto& r : step.logs) logs_.at(static_cast<std::size_t>(r.node)).push_back(r);

  Observation o;
  o.state.worst = worst_status(sim);
  double best_flagged = -1.0;
  double best_any = -1.0;
  for (std::size_t id = 0; id < nodes; ++id) {
    auto& buf = telemetry_[id];
    auto& logs = logs_[id];
    if (buf.size() < n) continue;
    const std::int64_t t_start = buf.front().t;
    while (!logs.empty() && logs.front().t < t_start) logs.pop_front();

    FeatureWindow w;
    w.node = static_cast<int>(id);
    w.t_end = buf.back().t;
    w.x_seq = Tensor::zeros(n, kMetricCount);
    for (std::size_t r = 0; r < n; ++r) {
      const Metrics m = stack_.normalizer.apply(buf[r].metrics);
      std::copy(m.begin(), m.end(), w.x_seq.row(r).begin());
    }
    const std::vector<LogRecord> window_logs(logs.begin(), logs.end());
    w.e_text = embed_text(std::span<const LogRecord>(window_logs), stack_.features.embed_dim);
    const WindowScore score = score_window(stack_, w);

    const NodeState& state = sim.node(static_cast<int>(id));
    if (state.repair_in_flight()) continue;
    if (score.fused > best_any && !o.state.alarm) {
      best_any = score.fused;
      o.target = w.node;
    }
    if (!score.flag) continue;
    o.flagged_nodes.push_back(w.node);
    if (score.fused > best_flagged) {
      best_flagged = score.fused;
      o.state.alarm = true;
      o.state.dominant = class_fault(score.svm_class);
      o.target = w.node;
    }
  }
  return o;
}

// ---- episodes ----

double mean_recovery_ticks(const std::vector<Event>& events, std::int64_t horizon,
                           std::size_t* count) {
  const auto episodes = recovery_time(events, horizon);
  if (count != nullptr) *count = episodes.size();
  if (episodes.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : episodes) sum += static_cast<double>(e.ticks);
  return sum / static_cast<double>(episodes.size());
}

double stability(const std::vector<Event>& events) {
  std::size_t ticks = 0;
  std::size_t stable = 0;
  for (const auto& e : events) {
    if (e.kind != EventKind::Tick) continue;
    ++ticks;
    if (e.failed_nodes == 0) ++stable;
  }
  return ticks == 0 ? 1.0 : static_cast<double>(stable) / static_cast<double>(ticks);
}

EpisodeResult run_episode(Simulation& sim, Observer& observer, QTable& table,
                          const EpisodeConfig& cfg, Rng& rng) {
  if (cfg.horizon <= 0) throw ConfigError("run_episode: horizon must be > 0");
  observer.reset();
  EpisodeResult result;
  const std::int64_t start = sim.now();
  const std::int64_t end = std::min(start + cfg.horizon, sim.config().ticks);
  Observation obs = observer.initial(sim);
  double td_sum = 0.0;
  while (sim.now() < end) {
    const std::size_t s = obs.state.index();
    const RecoveryAction a = cfg.policy == PolicyMode::AlwaysNoOp
                                 ? RecoveryAction::NoOp
                                 : select_action(table, s, cfg.epsilon, rng);
    const StepResult step = sim.step({a, obs.target});
    Observation next = observer.observe(sim, step);
    for (int node : next.flagged_nodes) sim.mark_detected(node);
    const std::size_t s_next = next.state.index();
    double delta = step.reward + table.config().gamma * table.max_value(s_next) - table.value(s, a);
    if (cfg.learn) delta = q_update(table, s, a, step.reward, s_next);
    td_sum += delta * delta;
    result.cumulative_reward += step.reward;
    result.steps.push_back({step.t, obs.state, a, obs.target, step.reward});
    obs = std::move(next);
  }
  result.td_loss = result.steps.empty() ? 0.0 : td_sum / static_cast<double>(result.steps.size());
  for (const auto& e : sim.events()) {
    if (e.t >= start) result.events.push_back(e);
  }
  result.mean_recovery_ticks =
      mean_recovery_ticks(result.events, end - start, &result.recovery_episodes);
  result.stability = stability(result.events);
  return result;
}

void write_episode_log_jsonl(std::ostream& os, int episode, const EpisodeResult& result) {
  for (const auto& st : result.steps) {
    nlohmann::json j{{"ep", episode},
                     {"t", st.t},
                     {"state",
                      {st.state.alarm ? 1 : 0, class_index(st.state.dominant),
                       static_cast<int>(st.state.worst)}},
                     {"action", std::string(to_string(st.action))},
                     {"reward", st.reward}};
    os << j.dump() << '\n';
  }
}

void write_episode_summary_csv(std::ostream& os, std::span<const EpisodeResult> results) {
  os << "episode,cum_reward,td_loss,mean_recovery_ticks\n";
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < results.size(); ++i) {
    os << i << ',' << results[i].cumulative_reward << ',' << results[i].td_loss << ','
       << results[i].mean_recovery_ticks << '\n';
  }
  os.precision(old);
}

std::vector<EpisodeSummary> read_episode_summary_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("episodes csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "episode,cum_reward,td_loss,mean_recovery_ticks") {
    throw ParseError("episodes csv: unexpected header '" + line + "'");
  }
  std::vector<EpisodeSummary> out;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 4) throw ParseError("episodes csv line " + std::to_string(n) + ": expected 4 fields");
    try {
      out.push_back({std::stoi(f[0]), std::stoi(f[1]), std::stod(f[2]), std::stod(f[3])});
    } catch (const std::logic_error&) {
      throw ParseError("episodes csv line " + std::to_string(n) + ": malformed number");
    }
  }
  return out;
}

}  // namespace fdsh
