// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sstream>

#include "fdsh/cluster_sim.hpp"
#include "fdsh/errors.hpp"

using namespace fdsh;

namespace {

SimConfig quiet(int nodes = 4, std::int64_t ticks = 400) { return {nodes, ticks, 0.0}; }

std::vector<FaultClass> all_faults() {
  std::vector<FaultClass> v;
  for (std::size_t i = 0; i < kFaultClassCount; ++i) v.push_back(static_cast<FaultClass>(i));
  return v;
}

std::vector<RecoveryAction> all_actions() {
  std::vector<RecoveryAction> v;
  for (std::size_t i = 0; i < kActionCount; ++i) v.push_back(static_cast<RecoveryAction>(i));
  return v;
}

}  // namespace

TEST_CASE("new simulation starts all healthy") {
  Simulation sim({4, 100, 0.05}, 42);
  CHECK(sim.now() == 0);
  for (const auto& n : sim.nodes()) {
    CHECK(n.status == NodeStatus::Healthy);
    CHECK_FALSE(n.active_fault.has_value());
  }
}

TEST_CASE("invalid configs are rejected") {
  CHECK_THROWS_AS(Simulation({0, 10, 0.0}, 1), ConfigError);
  CHECK_THROWS_AS(Simulation({2, 10, 1.0}, 1), ConfigError);
  CHECK_THROWS_AS(Simulation({2, 10, -0.1}, 1), ConfigError);
}

TEST_CASE("same seed gives identical trajectories, different seeds diverge") {
  auto run = [](std::uint64_t seed) {
    Simulation sim({4, 1000, 0.05}, seed);
    std::vector<double> trace;
    while (!sim.finished()) {
      for (const auto& s : sim.step({}).telemetry) trace.insert(trace.end(), s.metrics.begin(), s.metrics.end());
    }
    return trace;
  };
  const auto a = run(42), b = run(42), c = run(43);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("fault-free NoOp run stays healthy") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Simulation sim(quiet(3, 500), seed);
    while (!sim.finished()) {
      const StepResult r = sim.step({});
      CHECK(r.reward == 0);
      for (const auto& l : r.labels) CHECK_FALSE(l.fault.has_value());
    }
    CHECK(sim.all_healthy());
  }
}

TEST_CASE("metrics stay in [0,1]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Simulation sim({4, 800, 0.2}, seed);
    Rng rng(seed);
    std::uniform_int_distribution<int> act(0, 3), node(0, 3);
    while (!sim.finished()) {
      const StepResult r = sim.step({static_cast<RecoveryAction>(act(rng)), node(rng)});
      CHECK(r.telemetry.size() == 4);
      for (const auto& s : r.telemetry) {
        for (double v : s.metrics) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("fault signatures") {
  SUBCASE("cpu saturation pins cpu high until cured") {
    Simulation sim(quiet(), 1);
    sim.inject_fault(0, FaultClass::CpuSaturation);
    CHECK(sim.node(0).status == NodeStatus::Degraded);
    for (int i = 0; i < 50; ++i) CHECK(sim.step({}).telemetry[0].metrics[0] >= 0.9);
  }
  SUBCASE("service crash fails the node with error rate 1") {
    Simulation sim(quiet(), 1);
    sim.inject_fault(1, FaultClass::ServiceCrash);
    CHECK(sim.node(1).status == NodeStatus::Failed);
    for (int i = 0; i < 20; ++i) CHECK(sim.step({}).telemetry[1].metrics[4] == 1.0);
  }
  SUBCASE("faulted nodes log a warning or error every tick") {
    for (FaultClass c : all_faults()) {
      Simulation sim(quiet(), 2);
      sim.inject_fault(2, c);
      for (int i = 0; i < 20; ++i) {
        const StepResult r = sim.step({});
        bool found = false;
        for (const auto& l : r.logs) {
          if (l.node == 2 && l.severity != Severity::Info && l.template_id == fault_template(c)) found = true;
        }
        CHECK(found);
      }
    }
  }
}

TEST_CASE("uncured faults persist") {
  for (FaultClass c : all_faults()) {
    Simulation sim(quiet(2, 200), 3);
    sim.inject_fault(0, c);
    for (int i = 0; i < 150; ++i) sim.step({});
    CHECK(sim.node(0).active_fault == c);
  }
}

TEST_CASE("inject_fault on a faulted node is a state error") {
  Simulation sim(quiet(), 1);
  sim.inject_fault(0, FaultClass::MemoryLeak);
  CHECK_THROWS_AS(sim.inject_fault(0, FaultClass::DiskFailure), StateError);
  CHECK_THROWS_AS(sim.inject_fault(9, FaultClass::DiskFailure), InputError);
}

TEST_CASE("remedy table is exact over every fault and action") {
  for (FaultClass c : all_faults()) {
    for (RecoveryAction a : all_actions()) {
      CAPTURE(to_string(c));
      CAPTURE(to_string(a));
      Simulation sim(quiet(2, 100), 7);
      sim.inject_fault(0, c);
      const StepResult r = sim.step({a, 0});
      if (a == RecoveryAction::NoOp) {
        CHECK(r.reward == 0);
      } else if (a == curing_action(c)) {
        CHECK(r.reward == 1);
      } else {
        CHECK(r.reward == -1);
      }
      int healed_after = -1;
      for (int i = 1; i <= recovery_window(a) + 20; ++i) {
        sim.step({});
        if (healed_after < 0 && sim.node(0).status == NodeStatus::Healthy) healed_after = i;
      }
      if (a == curing_action(c)) {
        CHECK(healed_after == action_latency(a));
      } else {
        CHECK(healed_after == -1);
        CHECK(sim.node(0).active_fault == c);
      }
    }
  }
}

TEST_CASE("acting on a healthy cluster causes damage") {
  for (RecoveryAction a : all_actions()) {
    if (a == RecoveryAction::NoOp) continue;
    Simulation sim(quiet(3, 100), 5);
    const StepResult r = sim.step({a, 1});
    CHECK(r.outcome == ActionOutcome::Damage);
    CHECK(r.reward == -1);
    CHECK(sim.node(1).status == NodeStatus::Degraded);
    for (int i = 1; i < action_latency(a); ++i) {
      sim.step({});
      CHECK(sim.node(1).status == NodeStatus::Degraded);
    }
    sim.step({});
    CHECK(sim.node(1).status == NodeStatus::Healthy);
    CHECK_FALSE(sim.node(1).active_fault.has_value());
  }
}

TEST_CASE("reward mapping has exactly three values") {
  CHECK(reward(ActionOutcome::Recovered) == 1);
  CHECK(reward(ActionOutcome::NotCured) == -1);
  CHECK(reward(ActionOutcome::Damage) == -1);
  CHECK(reward(ActionOutcome::Idle) == 0);
}

TEST_CASE("rewards stay in {-1,0,1} under random play") {
  Simulation sim({4, 2000, 0.1}, 11);
  Rng rng(11);
  std::uniform_int_distribution<int> act(0, 3), node(0, 3);
  while (!sim.finished()) {
    const int r = sim.step({static_cast<RecoveryAction>(act(rng)), node(rng)}).reward;
    CHECK((r == -1 || r == 0 || r == 1));
  }
}

TEST_CASE("recovery_time examples") {
  std::vector<Event> ev{
      {10, 0, EventKind::Inject, FaultClass::ServiceCrash, RecoveryAction::NoOp, 0},
      {12, 0, EventKind::Detect, FaultClass::ServiceCrash, RecoveryAction::NoOp, 0},
      {15, 0, EventKind::Healthy, FaultClass::ServiceCrash, RecoveryAction::NoOp, 0},
      {20, 1, EventKind::Inject, FaultClass::DiskFailure, RecoveryAction::NoOp, 0},
  };
  const auto eps = recovery_time(ev, 200);
  REQUIRE(eps.size() == 2);
  CHECK(eps[0].ticks == 3);
  CHECK_FALSE(eps[0].censored);
  CHECK(eps[1].ticks == 200);
  CHECK(eps[1].censored);
}

TEST_CASE("recovery_time rejects malformed logs") {
  std::vector<Event> orphan{{5, 0, EventKind::Healthy, FaultClass::MemoryLeak, RecoveryAction::NoOp, 0}};
  CHECK_THROWS_AS(recovery_time(orphan, 100), ParseError);
  std::vector<Event> twice{{1, 0, EventKind::Inject, FaultClass::MemoryLeak, RecoveryAction::NoOp, 0},
                           {2, 0, EventKind::Inject, FaultClass::MemoryLeak, RecoveryAction::NoOp, 0}};
  CHECK_THROWS_AS(recovery_time(twice, 100), ParseError);
}

TEST_CASE("optimal response recovers in latency plus detection lag") {
  for (FaultClass c : all_faults()) {
    Simulation sim(quiet(2, 100), 9);
    sim.step({});
    sim.inject_fault(0, c);
    sim.step({});
    sim.mark_detected(0);  // flagged on the tick the signature first shows
    sim.step({curing_action(c), 0});
    for (int i = 0; i < 10; ++i) sim.step({});
    const auto eps = recovery_time(sim.events(), 100);
    REQUIRE(eps.size() == 1);
    CHECK(eps[0].ticks == action_latency(curing_action(c)) + 1);
  }
}

TEST_CASE("JSON-lines streams round-trip") {
  Simulation sim({3, 60, 0.1}, 4);
  std::vector<TelemetrySample> tel;
  std::vector<LogRecord> logs;
  std::vector<LabelRecord> labels;
  while (!sim.finished()) {
    auto r = sim.step({RecoveryAction::RestartService, 0});
    tel.insert(tel.end(), r.telemetry.begin(), r.telemetry.end());
    logs.insert(logs.end(), r.logs.begin(), r.logs.end());
    labels.insert(labels.end(), r.labels.begin(), r.labels.end());
  }
  std::stringstream ts, ls, ys, es;
  write_telemetry_jsonl(ts, tel);
  write_logs_jsonl(ls, logs);
  write_labels_jsonl(ys, labels);
  write_events_jsonl(es, sim.events());
  const auto tel2 = read_telemetry_jsonl(ts);
  REQUIRE(tel2.size() == tel.size());
  for (std::size_t i = 0; i < tel.size(); ++i) CHECK(tel2[i].metrics == tel[i].metrics);
  const auto logs2 = read_logs_jsonl(ls);
  REQUIRE(logs2.size() == logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) {
    CHECK(logs2[i].tokens == logs[i].tokens);
    CHECK(logs2[i].severity == logs[i].severity);
  }
  const auto labels2 = read_labels_jsonl(ys);
  REQUIRE(labels2.size() == labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) CHECK(labels2[i].fault == labels[i].fault);
  const auto ev = read_events_jsonl(es);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].size() == sim.events().size());
}

TEST_CASE("telemetry line format") {
  std::stringstream os;
  write_telemetry_jsonl(os, {{3, 1, {0.5, 0.25, 0.0, 1.0, 0.125}}});
  const std::string line = os.str();
  for (const char* key : {"\"t\":3", "\"node\":1", "\"cpu\":0.5", "\"mem\":0.25", "\"disk\":0", "\"net\":1", "\"err\":0.125"}) {
    CHECK(line.find(key) != std::string::npos);
  }
  std::stringstream bad("{\"t\":1,\"node\":0}\n");
  CHECK_THROWS_AS(read_telemetry_jsonl(bad), ParseError);
}
