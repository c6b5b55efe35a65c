// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace fdsh {

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" estimator). q is clamped to [0,1].
double quantile(std::span<const double> values, double q);

double mean(std::span<const double> values);

struct Distribution {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double iqr = 0.0;
  std::size_t count = 0;
};

Distribution summarize(std::span<const double> values);

/// Trailing moving average; element i averages [max(0, i-window+1), i].
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

}  // namespace fdsh
