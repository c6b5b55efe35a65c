// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>

#include "fdsh/errors.hpp"
#include "fdsh/harness.hpp"

namespace fdsh {
namespace {

namespace fs = std::filesystem;

// Sub-streams of the experiment seed.
constexpr std::uint64_t kGenStream = 0;
constexpr std::uint64_t kHealStreamBase = 0x2000;
constexpr std::uint64_t kHealPolicyStream = 0x3000;

constexpr int kOperatorDelay = 6;
constexpr double kTestStart = 0.85;

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open '" + p.string() + "' for writing");
  return os;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw InputError("cannot open '" + p.string() + "'");
  return is;
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix);
}

Command scripted_operator(const Simulation& sim) {
  for (const auto& n : sim.nodes()) {
    if (n.active_fault && !n.repair_in_flight() && n.fault_age >= kOperatorDelay) {
      return {curing_action(*n.active_fault), n.node_id};
    }
  }
  return {};
}

}  // namespace

double storm_fault_rate(double fault_rate) noexcept { return std::min(0.5, 3.0 * fault_rate); }

GeneratedRun generate(const ExperimentConfig& cfg) {
  cfg.validate();
  Simulation sim(cfg.sim, derive_seed(cfg.seed, kGenStream));
  GeneratedRun run;
  while (!sim.finished()) {
    StepResult r = sim.step(scripted_operator(sim));
    for (auto& s : r.telemetry) run.data.telemetry.push_back(s);
    for (auto& l : r.logs) run.data.logs.push_back(std::move(l));
    for (auto& l : r.labels) run.data.labels.push_back(l);
  }
  run.events = sim.events();
  return run;
}

void write_dataset(const fs::path& dir, const GeneratedRun& run) {
  fs::create_directories(dir);
  auto t = open_out(dir / "telemetry.jsonl");
  write_telemetry_jsonl(t, run.data.telemetry);
  auto l = open_out(dir / "logs.jsonl");
  write_logs_jsonl(l, run.data.logs);
  auto y = open_out(dir / "labels.jsonl");
  write_labels_jsonl(y, run.data.labels);
  auto e = open_out(dir / "events.jsonl");
  write_events_jsonl(e, run.events);
}

Dataset read_dataset(const fs::path& dir) {
  Dataset d;
  auto t = open_in(dir / "telemetry.jsonl");
  d.telemetry = read_telemetry_jsonl(t);
  auto l = open_in(dir / "logs.jsonl");
  d.logs = read_logs_jsonl(l);
  auto y = open_in(dir / "labels.jsonl");
  d.labels = read_labels_jsonl(y);
  return d;
}

TrainResult train_stage(const ExperimentConfig& cfg, const fs::path& data_dir,
                        const fs::path& model_out) {
  const TrainConfig tc = cfg.train_config();
  const DataSplits splits = prepare_splits(read_dataset(data_dir), tc);
  TrainResult result = train(tc, splits);
  if (model_out.has_parent_path()) fs::create_directories(model_out.parent_path());
  save_checkpoint(result.bundle, model_out);
  auto curve = open_out(with_suffix(model_out, ".loss.csv"));
  write_loss_curve_csv(curve, result.curve);
  return result;
}

std::vector<WindowScore> detect_stage(const fs::path& model, const fs::path& data_dir,
                                      const fs::path& out, DetectSplit split) {
  const ModelBundle bundle = load_checkpoint(model);
  const Dataset data = read_dataset(data_dir);
  if (data.telemetry.empty()) throw InputError("detect: no telemetry");
  const auto [lo, hi] = std::minmax_element(
      data.telemetry.begin(), data.telemetry.end(),
      [](const TelemetrySample& a, const TelemetrySample& b) { return a.t < b.t; });
  const double test_start =
      static_cast<double>(lo->t) + kTestStart * static_cast<double>(hi->t - lo->t + 1);

  std::vector<WindowScore> scores;
  std::vector<PredictionRow> predictions;
  for (const auto& w : make_windows(data, bundle.detectors.normalizer, bundle.detectors.features)) {
    if (split == DetectSplit::Test && static_cast<double>(w.t_end) < test_start) continue;
    scores.push_back(score_window(bundle.detectors, w));
    const double p = predict_failure(bundle.predictor, w);
    predictions.push_back({w.t_end, w.node, p, p > bundle.predictor.decision_threshold});
  }
  auto os = open_out(out);
  write_scores_csv(os, scores);
  auto ps = open_out(out.parent_path() / "predictions.csv");
  write_predictions_csv(ps, predictions);
  return scores;
}

HealOutcome heal_evaluation(const ExperimentConfig& cfg, const ModelBundle& bundle) {
  SimConfig sc = cfg.sim;
  sc.ticks = kHealHorizon;
  sc.fault_rate = storm_fault_rate(cfg.sim.fault_rate);
  DetectorObserver observer(bundle.detectors);
  HealOutcome out;
  for (int i = 0; i < kHealSeeds; ++i) {
    const std::uint64_t seed = derive_seed(cfg.seed, kHealStreamBase + static_cast<std::uint64_t>(i));
    for (PolicyMode mode : {PolicyMode::EpsilonGreedy, PolicyMode::AlwaysNoOp}) {
      QTable q = bundle.q;
      Simulation sim(sc, seed);
      Rng rng = make_rng(cfg.seed, kHealPolicyStream + static_cast<std::uint64_t>(i));
      EpisodeConfig ec;
      ec.horizon = kHealHorizon;
      ec.epsilon = 0.0;
      ec.learn = false;
      ec.policy = mode;
      auto& dst = mode == PolicyMode::AlwaysNoOp ? out.noop : out.healer;
      dst.push_back(run_episode(sim, observer, q, ec, rng));
    }
  }
  return out;
}

fs::path events_path_for(const fs::path& episodes_csv) {
  return with_suffix(episodes_csv, ".events.jsonl");
}

fs::path noop_path_for(const fs::path& episodes_csv) {
  return with_suffix(episodes_csv, "_noop.csv");
}

HealOutcome heal_stage(const ExperimentConfig& cfg, const fs::path& model, const fs::path& out) {
  const ModelBundle bundle = load_checkpoint(model);
  HealOutcome h = heal_evaluation(cfg, bundle);
  const fs::path noop = noop_path_for(out);
  {
    auto os = open_out(out);
    write_episode_summary_csv(os, h.healer);
    auto ns = open_out(noop);
    write_episode_summary_csv(ns, h.noop);
  }
  auto steps = open_out(with_suffix(out, ".jsonl"));
  auto ev = open_out(events_path_for(out));
  auto nev = open_out(events_path_for(noop));
  for (std::size_t i = 0; i < h.healer.size(); ++i) {
    write_episode_log_jsonl(steps, static_cast<int>(i), h.healer[i]);
    write_events_jsonl(ev, h.healer[i].events, static_cast<int>(i));
    write_events_jsonl(nev, h.noop[i].events, static_cast<int>(i));
  }
  return h;
}

MetricsReport eval_stage(const fs::path& scores, const fs::path& truth_dir,
                         const fs::path& episodes, const fs::path& out) {
  auto ss = open_in(scores);
  const auto rows = read_scores_csv(ss);
  auto ls = open_in(truth_dir / "labels.jsonl");
  const auto labels = read_labels_jsonl(ls);
  auto es = open_in(episodes);
  const auto summary = read_episode_summary_csv(es);
  auto hs = open_in(events_path_for(episodes));
  const auto healer_runs = read_events_jsonl(hs);
  auto ns = open_in(events_path_for(noop_path_for(episodes)));
  const auto noop_runs = read_events_jsonl(ns);
  if (summary.size() != healer_runs.size()) {
    throw JoinError("eval: episode summary and event log disagree on the episode count");
  }
  const MetricsReport report = evaluate(rows, labels, healer_runs, noop_runs, kHealHorizon);
  auto os = open_out(out);
  write_metrics_json(os, report);
  return report;
}

MetricsReport run_pipeline(const ExperimentConfig& cfg, const fs::path& out_dir,
                           const std::function<void(std::string_view)>& on_stage) {
  auto stage = [&](std::string_view name) {
    if (on_stage) on_stage(name);
  };
  stage("gen");
  fs::create_directories(out_dir);
  {
    auto os = open_out(out_dir / "config.conf");
    os << cfg.canonical();
  }
  const fs::path data = out_dir / "data";
  write_dataset(data, generate(cfg));
  const fs::path model = out_dir / "model.ckpt";
  stage("train");
  train_stage(cfg, data, model);
  stage("detect");
  detect_stage(model, data, out_dir / "scores.csv", DetectSplit::Test);
  stage("heal");
  heal_stage(cfg, model, out_dir / "episodes.csv");
  stage("eval");
  return eval_stage(out_dir / "scores.csv", data, out_dir / "episodes.csv",
                    out_dir / "metrics.json");
}

std::vector<SweepRow> sweep_hidden(const ExperimentConfig& base, std::span<const std::size_t> widths,
                                   const fs::path& out_dir) {
  const fs::path data = out_dir / "data";
  write_dataset(data, generate(base));
  std::vector<SweepRow> rows;
  for (std::size_t w : widths) {
    ExperimentConfig cfg = base;
    cfg.hidden = w;
    cfg.validate();
    const fs::path dir = out_dir / ("hidden_" + std::to_string(w));
    train_stage(cfg, data, dir / "model.ckpt");
    detect_stage(dir / "model.ckpt", data, dir / "scores.csv", DetectSplit::Test);
    heal_stage(cfg, dir / "model.ckpt", dir / "episodes.csv");
    const MetricsReport r =
        eval_stage(dir / "scores.csv", data, dir / "episodes.csv", dir / "metrics.json");
    rows.push_back({w, r.accuracy, r.mean_recovery_ticks, r.baseline_mean_recovery_ticks});
  }
  auto os = open_out(out_dir / "sweep.csv");
  os.precision(17);
  os << "hidden,accuracy,mean_recovery_ticks,noop_mean_recovery_ticks\n";
  for (const auto& r : rows) {
    os << r.hidden << ',' << r.accuracy << ',' << r.mean_recovery_ticks << ','
       << r.baseline_mean_recovery_ticks << '\n';
  }
  return rows;
}

}  // namespace fdsh
