// SPDX-License-Identifier: Apache-2.0
// Command-line front end: gen, train, detect, heal, eval, run and sweep.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fdsh/errors.hpp"
#include "fdsh/harness.hpp"

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kData = 2, kTraining = 3, kEvaluation = 4 };

int report(const std::string& stage, int code, const std::exception& e) {
  std::cerr << "fdsh: stage '" << stage << "' failed: " << e.what() << '\n';
  return code;
}

template <class Fn>
int guarded(const std::string& stage, Fn&& fn) {
  try {
    fn();
    return kOk;
  } catch (const fdsh::ConfigError& e) {
    return report(stage, kConfig, e);
  } catch (const fdsh::TrainingError& e) {
    return report(stage, kTraining, e);
  } catch (const fdsh::JoinError& e) {
    return report(stage, kEvaluation, e);
  } catch (const fdsh::SampleSizeError& e) {
    return report(stage, kEvaluation, e);
  } catch (const fdsh::Error& e) {
    return report(stage, kData, e);
  } catch (const std::filesystem::filesystem_error& e) {
    return report(stage, kData, e);
  } catch (const std::exception& e) {
    return report(stage, kData, e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault detection and self-healing experiments on a simulated cluster"};
  app.require_subcommand(1);

  std::string config = "default";
  std::string out, data, model, scores, truth, episodes, split = "test";

  auto* gen = app.add_subcommand("gen", "simulate a labelled dataset");
  gen->add_option("--config", config, "config file or 'default'")->required();
  gen->add_option("--out", out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train detectors, predictor and healer");
  train->add_option("--config", config)->required();
  train->add_option("--data", data, "dataset directory")->required();
  train->add_option("--model-out", model, "checkpoint path")->required();

  auto* detect = app.add_subcommand("detect", "score windows with a trained model");
  detect->add_option("--model", model)->required();
  detect->add_option("--data", data)->required();
  detect->add_option("--out", out, "scores CSV")->required();
  detect->add_option("--split", split, "windows to score")
      ->check(CLI::IsMember({"test", "all"}));

  auto* heal = app.add_subcommand("heal", "evaluate the healer against a NoOp baseline");
  heal->add_option("--config", config)->required();
  heal->add_option("--model", model)->required();
  heal->add_option("--out", out, "episode summary CSV")->required();

  auto* eval = app.add_subcommand("eval", "compute metrics.json from artifacts");
  eval->add_option("--scores", scores)->required();
  eval->add_option("--truth", truth, "dataset directory with labels")->required();
  eval->add_option("--episodes", episodes)->required();
  eval->add_option("--out", out)->required();

  auto* run = app.add_subcommand("run", "full pipeline");
  run->add_option("--config", config)->required();
  run->add_option("--out", out)->required();

  auto* sweep = app.add_subcommand("sweep", "recovery time against model width");
  sweep->add_option("--config", config)->required();
  sweep->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);

  fdsh::ExperimentConfig cfg;
  if (app.got_subcommand(gen) || app.got_subcommand(train) || app.got_subcommand(heal) ||
      app.got_subcommand(run) || app.got_subcommand(sweep)) {
    if (const int rc = guarded("config", [&] { cfg = fdsh::load_config(config); }); rc != kOk) {
      return rc;
    }
  }

  if (app.got_subcommand(gen)) {
    return guarded("gen", [&] { fdsh::write_dataset(out, fdsh::generate(cfg)); });
  }
  if (app.got_subcommand(train)) {
    return guarded("train", [&] { fdsh::train_stage(cfg, data, model); });
  }
  if (app.got_subcommand(detect)) {
    return guarded("detect", [&] {
      fdsh::detect_stage(model, data, out,
                         split == "all" ? fdsh::DetectSplit::All : fdsh::DetectSplit::Test);
    });
  }
  if (app.got_subcommand(heal)) {
    return guarded("heal", [&] { fdsh::heal_stage(cfg, model, out); });
  }
  if (app.got_subcommand(eval)) {
    return guarded("eval", [&] { fdsh::eval_stage(scores, truth, episodes, out); });
  }
  if (app.got_subcommand(run)) {
    std::string stage = "run";
    try {
      fdsh::run_pipeline(cfg, out, [&](std::string_view s) { stage = s; });
      return kOk;
    } catch (...) {
      return guarded(stage, [] { throw; });
    }
  }
  const std::size_t widths[] = {8, 16, 32, 64};
  return guarded("sweep", [&] { fdsh::sweep_hidden(cfg, widths, out); });
}
