// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace fdsh {

/// How a recovery decision resolved, as accounted by the simulator.
enum class ActionOutcome {
  Idle,       // nothing to judge: NoOp, or a node already under repair
  Recovered,  // the fault present at action time clears within the recovery window
  NotCured,   // the action cannot clear the fault within the window
  Damage,     // a healthy component was disrupted
};

/// The three-branch recovery reward: +1 recovered, -1 not cured or damage, 0 otherwise.
constexpr int reward(ActionOutcome outcome) noexcept {
  switch (outcome) {
    case ActionOutcome::Recovered:
      return 1;
    case ActionOutcome::NotCured:
    case ActionOutcome::Damage:
      return -1;
    case ActionOutcome::Idle:
      return 0;
  }
  return 0;
}

}  // namespace fdsh
