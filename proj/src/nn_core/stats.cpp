// SPDX-License-Identifier: Apache-2.0
#include "fdsh/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fdsh/errors.hpp"

namespace fdsh {

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw InputError("quantile of empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  q = std::clamp(q, 0.0, 1.0);
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw InputError("mean of empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

Distribution summarize(std::span<const double> values) {
  Distribution d;
  d.count = values.size();
  if (values.empty()) return d;
  d.mean = mean(values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  d.min = *lo;
  d.max = *hi;
  d.iqr = quantile(values, 0.75) - quantile(values, 0.25);
  return d;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  if (window == 0) throw InputError("moving average window must be positive");
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += values[i];
    if (i >= window) acc -= values[i - window];
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace fdsh
