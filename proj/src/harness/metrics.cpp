// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>
#include <ostream>
#include <tuple>

#include <json.hpp>

#include "fdsh/errors.hpp"
#include "fdsh/harness.hpp"

namespace fdsh {
namespace {

using Key = std::pair<std::int64_t, int>;

std::vector<KeyedLabel> sorted(std::span<const KeyedLabel> v) {
  std::vector<KeyedLabel> out(v.begin(), v.end());
  std::sort(out.begin(), out.end(), [](const KeyedLabel& a, const KeyedLabel& b) {
    return std::tie(a.t, a.node) < std::tie(b.t, b.node);
  });
  return out;
}

nlohmann::json distribution_json(const Distribution& d) {
  return {{"mean", d.mean}, {"min", d.min}, {"max", d.max}, {"iqr", d.iqr}, {"count", d.count}};
}

Distribution summarize_or_empty(const std::vector<double>& v) {
  return v.empty() ? Distribution{} : summarize(v);
}

}  // namespace

double accuracy(std::span<const KeyedLabel> predicted, std::span<const KeyedLabel> truth) {
  if (predicted.size() != truth.size()) {
    throw JoinError("accuracy: " + std::to_string(predicted.size()) + " predictions vs " +
                    std::to_string(truth.size()) + " truth records");
  }
  if (predicted.empty()) throw JoinError("accuracy: no records");
  const auto p = sorted(predicted);
  const auto t = sorted(truth);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].t != t[i].t || p[i].node != t[i].node) {
      throw JoinError("accuracy: key (t=" + std::to_string(p[i].t) + ", node=" +
                      std::to_string(p[i].node) + ") has no matching truth record");
    }
    if (i > 0 && p[i].t == p[i - 1].t && p[i].node == p[i - 1].node) {
      throw JoinError("accuracy: duplicate key");
    }
    if (p[i].label == t[i].label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(p.size());
}

Distribution stability_score(std::span<const std::vector<Event>> runs) {
  if (runs.size() < 2) throw SampleSizeError("stability_score: need at least 2 runs");
  std::vector<double> per_run;
  for (const auto& r : runs) per_run.push_back(stability(r));
  return summarize(per_run);
}

MetricsReport evaluate(std::span<const WindowScore> scores, std::span<const LabelRecord> truth,
                       std::span<const std::vector<Event>> healer_runs,
                       std::span<const std::vector<Event>> noop_runs, std::int64_t horizon) {
  MetricsReport r;
  std::map<Key, std::size_t> truth_by_key;
  for (const auto& l : truth) truth_by_key[{l.t, l.node}] = class_index(l.fault);
  std::vector<KeyedLabel> pred, want;
  for (const auto& s : scores) {
    const auto it = truth_by_key.find({s.t, s.node});
    if (it == truth_by_key.end()) {
      throw JoinError("evaluate: no truth label for t=" + std::to_string(s.t) +
                      " node=" + std::to_string(s.node));
    }
    pred.push_back({s.t, s.node, s.svm_class});
    want.push_back({s.t, s.node, it->second});
  }
  r.accuracy = accuracy(pred, want);
  r.windows = pred.size();

  if (healer_runs.size() != noop_runs.size()) {
    throw JoinError("evaluate: healer and baseline run counts differ");
  }
  HealComparison c;
  for (std::size_t i = 0; i < healer_runs.size(); ++i) {
    c.healer_recovery.push_back(mean_recovery_ticks(healer_runs[i], horizon));
    c.noop_recovery.push_back(mean_recovery_ticks(noop_runs[i], horizon));
  }
  r.stability = stability_score(healer_runs);
  r.baseline_stability = stability_score(noop_runs);
  r.recovery = summarize_or_empty(c.healer_recovery);
  r.baseline_recovery = summarize_or_empty(c.noop_recovery);
  r.mean_recovery_ticks = r.recovery.mean;
  r.baseline_mean_recovery_ticks = r.baseline_recovery.mean;
  r.stability_score = r.stability.mean;
  r.baseline_stability_score = r.baseline_stability.mean;
  r.recovery_reduction = r.baseline_mean_recovery_ticks > 0.0
                             ? 1.0 - r.mean_recovery_ticks / r.baseline_mean_recovery_ticks
                             : 0.0;
  r.seeds = healer_runs.size();
  for (std::size_t i = 0; i < r.seeds; ++i) {
    if (c.healer_recovery[i] < c.noop_recovery[i]) ++r.seeds_faster;
    if (stability(healer_runs[i]) >= stability(noop_runs[i])) ++r.seeds_stability_geq;
  }
  return r;
}

void write_metrics_json(std::ostream& os, const MetricsReport& r) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["windows"] = r.windows;
  j["mean_recovery_ticks"] = r.mean_recovery_ticks;
  j["stability_score"] = r.stability_score;
  j["recovery_reduction"] = r.recovery_reduction;
  j["healer"] = {{"recovery_ticks", distribution_json(r.recovery)},
                 {"stability", distribution_json(r.stability)}};
  j["baseline_noop"] = {{"mean_recovery_ticks", r.baseline_mean_recovery_ticks},
                        {"stability_score", r.baseline_stability_score},
                        {"recovery_ticks", distribution_json(r.baseline_recovery)},
                        {"stability", distribution_json(r.baseline_stability)}};
  j["paired"] = {{"seeds", r.seeds},
                 {"seeds_faster_recovery", r.seeds_faster},
                 {"seeds_stability_geq", r.seeds_stability_geq}};
  os << j.dump(2) << '\n';
}

}  // namespace fdsh
