// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment configuration, evaluation metrics and the gen / train / detect /
// heal / eval pipeline behind the command-line tool.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fdsh/stats.hpp"
#include "fdsh/trainer.hpp"

namespace fdsh {

struct ExperimentConfig {
  SimConfig sim;
  std::uint64_t seed = 42;
  FeatureConfig features;
  std::size_t hidden = 32;
  std::size_t latent = 8;
  double eta = 0.01;
  int epochs = 30;
  std::size_t batch = 32;
  double C = 1.0;
  double lambda = 1e-4;
  double alpha = 0.2;
  double gamma = 0.9;
  double epsilon_start = 0.3;
  double epsilon_end = 0.01;
  int episodes = 500;
  double threshold_quantile = 0.99;

  void validate() const;
  /// One "key = value" line per key in a fixed order, values printed round-trip exact.
  std::string canonical() const;
  std::uint64_t fingerprint() const;
  TrainConfig train_config() const;
};

/// Parses "key = value" lines with '#' comments. ConfigError on unknown keys,
/// duplicates or malformed values. Missing keys keep their defaults.
ExperimentConfig parse_config(std::istream& is);
/// "default" selects the built-in defaults; anything else is a file path.
ExperimentConfig load_config(const std::string& path_or_default);

// ---- metrics ----

struct KeyedLabel {
  std::int64_t t = 0;
  int node = 0;
  std::size_t label = 0;  // class index
};

/// Fraction of keys with equal labels. Both sides must carry the same set of
/// (t, node) keys, in any order (JoinError otherwise).
double accuracy(std::span<const KeyedLabel> predicted, std::span<const KeyedLabel> truth);

/// Per-run fraction of ticks without a failed node. SampleSizeError below 2 runs.
Distribution stability_score(std::span<const std::vector<Event>> runs);

struct HealComparison {
  std::vector<double> healer_recovery;  // per seed
  std::vector<double> noop_recovery;
  std::vector<double> healer_stability;
  std::vector<double> noop_stability;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::size_t windows = 0;
  double mean_recovery_ticks = 0.0;
  double stability_score = 0.0;
  Distribution recovery;
  Distribution stability;
  double baseline_mean_recovery_ticks = 0.0;
  double baseline_stability_score = 0.0;
  Distribution baseline_recovery;
  Distribution baseline_stability;
  double recovery_reduction = 0.0;  // 1 - healer / baseline
  std::size_t seeds = 0;
  std::size_t seeds_faster = 0;        // healer recovery strictly lower
  std::size_t seeds_stability_geq = 0; // healer stability >= baseline
};

MetricsReport evaluate(std::span<const WindowScore> scores, std::span<const LabelRecord> truth,
                       std::span<const std::vector<Event>> healer_runs,
                       std::span<const std::vector<Event>> noop_runs, std::int64_t horizon);

/// Pretty-printed JSON with sorted keys.
void write_metrics_json(std::ostream& os, const MetricsReport& report);

// ---- pipeline stages ----

inline constexpr std::int64_t kHealHorizon = 200;
inline constexpr int kHealSeeds = 20;

/// Fault rate of the evaluation episodes: three times the configured rate, capped at 0.5.
double storm_fault_rate(double fault_rate) noexcept;

/// Simulates cfg.sim with a scripted operator that applies the curing action to
/// the lowest-id faulted node not under repair once its fault is 6 ticks old.
struct GeneratedRun {
  Dataset data;
  std::vector<Event> events;
};
GeneratedRun generate(const ExperimentConfig& cfg);

void write_dataset(const std::filesystem::path& dir, const GeneratedRun& run);
Dataset read_dataset(const std::filesystem::path& dir);

/// Trains on the data in `data_dir`; writes the checkpoint and <stem>.loss.csv beside it.
TrainResult train_stage(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                        const std::filesystem::path& model_out);

enum class DetectSplit { Test, All };

/// Scores windows of `data_dir` with the checkpoint; writes scores to `out`
/// and predictions.csv beside it.
std::vector<WindowScore> detect_stage(const std::filesystem::path& model,
                                      const std::filesystem::path& data_dir,
                                      const std::filesystem::path& out, DetectSplit split);

struct HealOutcome {
  std::vector<EpisodeResult> healer;
  std::vector<EpisodeResult> noop;
};
/// Greedy healer and NoOp baseline on kHealSeeds paired storm episodes.
HealOutcome heal_evaluation(const ExperimentConfig& cfg, const ModelBundle& bundle);
/// Writes episodes.csv, its _noop twin, the per-step JSON-lines log and the event logs.
HealOutcome heal_stage(const ExperimentConfig& cfg, const std::filesystem::path& model,
                       const std::filesystem::path& out);

/// Event-log path derived from an episodes CSV path (x.csv -> x.events.jsonl).
std::filesystem::path events_path_for(const std::filesystem::path& episodes_csv);
std::filesystem::path noop_path_for(const std::filesystem::path& episodes_csv);

MetricsReport eval_stage(const std::filesystem::path& scores,
                         const std::filesystem::path& truth_dir,
                         const std::filesystem::path& episodes,
                         const std::filesystem::path& out);

/// gen -> train -> detect -> heal -> eval under `out_dir`. `on_stage` hears
/// each stage name before it starts.
MetricsReport run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                           const std::function<void(std::string_view)>& on_stage = {});

struct SweepRow {
  std::size_t hidden = 0;
  double accuracy = 0.0;
  double mean_recovery_ticks = 0.0;
  double baseline_mean_recovery_ticks = 0.0;
};
/// Recovery time against model width; writes sweep.csv under `out_dir`.
std::vector<SweepRow> sweep_hidden(const ExperimentConfig& cfg, std::span<const std::size_t> widths,
                                   const std::filesystem::path& out_dir);

}  // namespace fdsh
