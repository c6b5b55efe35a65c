// SPDX-License-Identifier: Apache-2.0
// Drives the built command-line tool and checks exit codes and artifacts.
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "fdsh_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(FDSH_CLI) + " " + args + " >/dev/null 2>" + (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    write(kWork / "small.conf", "sim.ticks = 300\ntrain.epochs = 2\nrl.episodes = 4\n");
  }
};

}  // namespace

TEST_CASE("stage-by-stage commands succeed and agree with run") {
  Workspace ws;
  const std::string conf = (kWork / "small.conf").string();
  const std::string w = kWork.string();
  REQUIRE(run("gen --config " + conf + " --out " + w + "/data") == 0);
  REQUIRE(run("train --config " + conf + " --data " + w + "/data --model-out " + w + "/model.ckpt") == 0);
  REQUIRE(run("detect --model " + w + "/model.ckpt --data " + w + "/data --out " + w + "/scores.csv") == 0);
  REQUIRE(run("heal --config " + conf + " --model " + w + "/model.ckpt --out " + w + "/episodes.csv") == 0);
  REQUIRE(run("eval --scores " + w + "/scores.csv --truth " + w + "/data --episodes " + w +
              "/episodes.csv --out " + w + "/metrics.json") == 0);
  REQUIRE(run("run --config " + conf + " --out " + w + "/full") == 0);
  CHECK(read(kWork / "metrics.json") == read(kWork / "full/metrics.json"));
  CHECK(read(kWork / "model.ckpt") == read(kWork / "full/model.ckpt"));
  CHECK(read(kWork / "scores.csv").rfind("t,node,svm_class,ae_score,vae_score,fused,flag\n", 0) == 0);
  CHECK(read(kWork / "predictions.csv").rfind("t,node,p_fail,predicted\n", 0) == 0);
  CHECK(read(kWork / "episodes.csv").rfind("episode,cum_reward,td_loss,mean_recovery_ticks\n", 0) == 0);
  CHECK(read(kWork / "model.loss.csv").rfind("epoch,l_svm,l_ae,l_vae,l_dnn,l_rl,l_total\n", 0) == 0);
}

TEST_CASE("config errors exit with 1") {
  Workspace ws;
  write(kWork / "bad.conf", "no.such.key = 3\n");
  CHECK(run("gen --config " + (kWork / "bad.conf").string() + " --out " + kWork.string() + "/d") == 1);
  CHECK(read(kWork / "stderr.txt").find("config") != std::string::npos);
  CHECK(run("run --config " + (kWork / "missing.conf").string() + " --out " + kWork.string() + "/d") == 1);
}

TEST_CASE("data errors exit with 2 and name the stage") {
  Workspace ws;
  CHECK(run("detect --model " + kWork.string() + "/none.ckpt --data " + kWork.string() + " --out " +
            kWork.string() + "/s.csv") == 2);
  CHECK(read(kWork / "stderr.txt").find("detect") != std::string::npos);
  write(kWork / "garbage.ckpt", "FDSH\x01garbage");
  CHECK(run("heal --config default --model " + kWork.string() + "/garbage.ckpt --out " + kWork.string() +
            "/e.csv") == 2);
}

TEST_CASE("training divergence exits with 3") {
  Workspace ws;
  write(kWork / "hot.conf", "sim.ticks = 300\ntrain.epochs = 2\nrl.episodes = 2\ntrain.eta = 1e200\n");
  const std::string w = kWork.string();
  REQUIRE(run("gen --config " + w + "/hot.conf --out " + w + "/data") == 0);
  CHECK(run("train --config " + w + "/hot.conf --data " + w + "/data --model-out " + w + "/m.ckpt") == 3);
  CHECK(read(kWork / "stderr.txt").find("train") != std::string::npos);
}

TEST_CASE("evaluation join errors exit with 4") {
  Workspace ws;
  const std::string conf = (kWork / "small.conf").string();
  const std::string w = kWork.string();
  REQUIRE(run("run --config " + conf + " --out " + w + "/a") == 0);
  // labels from a different run do not cover the scored keys
  write(kWork / "other.conf", "sim.ticks = 120\nsim.nodes = 2\ntrain.epochs = 1\nrl.episodes = 2\n");
  REQUIRE(run("gen --config " + w + "/other.conf --out " + w + "/other") == 0);
  CHECK(run("eval --scores " + w + "/a/scores.csv --truth " + w + "/other --episodes " + w +
            "/a/episodes.csv --out " + w + "/m.json") == 4);
  CHECK(read(kWork / "stderr.txt").find("eval") != std::string::npos);
}
