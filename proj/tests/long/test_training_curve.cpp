// SPDX-License-Identifier: Apache-2.0
// Full-size training runs: the smoothed total loss must not rise over the
// second half of training on default synthetic data.
#include <doctest.h>

#include <cmath>

#include "fdsh/harness.hpp"
#include "fdsh/stats.hpp"

using namespace fdsh;

TEST_CASE("smoothed total loss is nonincreasing over the final half, 5 seeds") {
  for (std::uint64_t seed = 42; seed < 47; ++seed) {
    CAPTURE(seed);
    ExperimentConfig cfg;
    cfg.seed = seed;
    const TrainConfig tc = cfg.train_config();
    const TrainResult r = train(tc, prepare_splits(generate(cfg).data, tc));
    std::vector<double> totals;
    for (const auto& e : r.curve) totals.push_back(e.total);
    REQUIRE(totals.size() == 30);
    CHECK(totals.back() < totals.front());
    const auto smooth = moving_average(totals, 5);
    for (std::size_t i = smooth.size() / 2 + 1; i < smooth.size(); ++i) {
      CAPTURE(i);
      CHECK(smooth[i] <= smooth[i - 1]);
    }
  }
}
