// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "experiments.hpp"
#include "fdsh/errors.hpp"
#include "fdsh/healer.hpp"
#include "support.hpp"

using namespace fdsh;

TEST_CASE("agent state indexing covers 36 states") {
  CHECK(kStateCount == 36);
  for (std::size_t i = 0; i < kStateCount; ++i) CHECK(AgentState::from_index(i).index() == i);
  CHECK(AgentState{}.index() == 0);
  CHECK_THROWS(AgentState::from_index(36));
}

TEST_CASE("q_update examples") {
  QTable q(QConfig{0.5, 0.9});
  q_update(q, 3, RecoveryAction::RestartService, 1.0, 4);
  CHECK(q.value(3, RecoveryAction::RestartService) == 0.5);

  q.set(7, RecoveryAction::ApplyPatch, 0.4);
  q.set(3, RecoveryAction::NoOp, 0.9 * 0.4);
  const double before = q.value(3, RecoveryAction::NoOp);
  const double delta = q_update(q, 3, RecoveryAction::NoOp, 0.0, 7);
  CHECK(delta == 0.0);
  CHECK(q.value(3, RecoveryAction::NoOp) == before);
}

TEST_CASE("q values stay bounded by 1/(1-gamma)") {
  QTable q(QConfig{0.2, 0.9});
  Rng rng(1);
  std::uniform_int_distribution<std::size_t> s(0, kStateCount - 1);
  std::uniform_int_distribution<int> a(0, 3), r(-1, 1);
  for (int i = 0; i < 100000; ++i) {
    q_update(q, s(rng), static_cast<RecoveryAction>(a(rng)), r(rng), s(rng));
  }
  for (double v : q.values().values()) CHECK(std::abs(v) <= 10.0);
}

TEST_CASE("invalid q config is rejected") {
  CHECK_THROWS_AS(QTable(QConfig{0.0, 0.9}), ConfigError);
  CHECK_THROWS_AS(QTable(QConfig{0.2, 1.0}), ConfigError);
}

TEST_CASE("action selection") {
  QTable q;
  Rng rng(2);
  CHECK(select_action(q, 5, 0.0, rng) == RecoveryAction::NoOp);
  q.set(5, RecoveryAction::RestartService, 1.0);
  CHECK(select_action(q, 5, 0.0, rng) == RecoveryAction::RestartService);
  CHECK(greedy_action(q, 5) == RecoveryAction::RestartService);

  constexpr int kDraws = 10000;
  std::array<int, kActionCount> counts{};
  for (int i = 0; i < kDraws; ++i) ++counts[static_cast<std::size_t>(select_action(q, 5, 1.0, rng))];
  const double sigma = std::sqrt(kDraws * 0.25 * 0.75);
  for (int c : counts) CHECK(std::abs(c - kDraws * 0.25) <= 3.0 * sigma);
}

TEST_CASE("td loss gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(600 + seed);
    const Tensor q = fdsh::test::random_tensor({kStateCount, kActionCount}, rng);
    std::uniform_int_distribution<std::size_t> s(0, kStateCount - 1);
    std::uniform_int_distribution<int> a(0, 3), r(-1, 1);
    std::vector<Transition> tr;
    for (int i = 0; i < 40; ++i) tr.push_back({s(rng), static_cast<RecoveryAction>(a(rng)), double(r(rng)), s(rng)});
    Tensor grad = Tensor::zeros(kStateCount, kActionCount);
    const double l = td_loss_grad(q, 0.9, tr, grad);
    CHECK(l == td_loss(q, 0.9, tr));
    CHECK(l >= 0.0);
    const ScalarFn f = [&](const Tensor& t) { return td_loss(t, 0.9, tr); };
    CHECK(grad_check(f, grad, q, 1e-5) <= 1e-4);
  }
}

TEST_CASE("quiet episode earns nothing") {
  Simulation sim({4, 200, 0.0}, 1);
  OracleObserver oracle;
  QTable q;
  Rng rng(1);
  const EpisodeResult r = run_episode(sim, oracle, q, {200, 0.0, true}, rng);
  CHECK(r.cumulative_reward == 0);
  CHECK(r.steps.size() == 200);
  CHECK(r.stability == 1.0);
  CHECK(r.recovery_episodes == 0);
}

TEST_CASE("non-positive horizon is a config error") {
  Simulation sim({2, 10, 0.0}, 1);
  OracleObserver oracle;
  QTable q;
  Rng rng(1);
  CHECK_THROWS_AS(run_episode(sim, oracle, q, {0, 0.0, true}, rng), ConfigError);
}

TEST_CASE("remedy-table policy cures a single crash for +1") {
  QTable q;
  for (std::size_t i = 0; i < kFaultClassCount; ++i) {
    const auto c = static_cast<FaultClass>(i);
    for (std::size_t w = 0; w < kNodeStatusCount; ++w) {
      const AgentState s{true, c, static_cast<NodeStatus>(w)};
      q.set(s.index(), curing_action(c), 1.0);
    }
  }
  Simulation sim({4, 50, 0.0}, 3);
  sim.inject_fault(2, FaultClass::ServiceCrash);
  OracleObserver oracle;
  Rng rng(3);
  const EpisodeResult r = run_episode(sim, oracle, q, {50, 0.0, false}, rng);
  CHECK(r.cumulative_reward == 1);
  CHECK(sim.all_healthy());
  CHECK(r.recovery_episodes == 1);
  // flagged at tick 0, restart chosen on the next tick, healthy 3 ticks later
  CHECK(r.mean_recovery_ticks == doctest::Approx(4.0));
}

TEST_CASE("oracle-mode Q-learning recovers the remedy table") {
  const QTable q = fdsh::test::train_oracle_q(7, 500);
  CHECK(fdsh::test::single_fault_states_solved(q) == 5);
  for (double v : q.values().values()) CHECK(std::abs(v) <= 10.0);
}

TEST_CASE("stability and recovery from an event log") {
  std::vector<Event> ev;
  for (int t = 0; t < 200; ++t) ev.push_back({t, -1, EventKind::Tick, std::nullopt, RecoveryAction::NoOp, t < 10 ? 1 : 0});
  CHECK(stability(ev) == doctest::Approx(0.95));
  CHECK(mean_recovery_ticks(ev, 200) == 0.0);
}

TEST_CASE("episode log and summary formats") {
  Simulation sim({2, 30, 0.2}, 5);
  OracleObserver oracle;
  QTable q;
  Rng rng(5);
  const std::vector<EpisodeResult> runs{run_episode(sim, oracle, q, {30, 0.5, true}, rng)};
  std::stringstream log;
  write_episode_log_jsonl(log, 0, runs[0]);
  std::string first;
  std::getline(log, first);
  CHECK(first.rfind("{\"action\":", 0) == 0);
  CHECK(first.find("\"ep\":0") != std::string::npos);
  CHECK(first.find("\"state\":[") != std::string::npos);
  std::stringstream csv;
  write_episode_summary_csv(csv, runs);
  const auto back = read_episode_summary_csv(csv);
  REQUIRE(back.size() == 1);
  CHECK(back[0].cum_reward == runs[0].cumulative_reward);
  CHECK(back[0].td_loss == runs[0].td_loss);
}
