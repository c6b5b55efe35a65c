// SPDX-License-Identifier: Apache-2.0
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "fdsh/errors.hpp"
#include "fdsh/features.hpp"
#include "fdsh/harness.hpp"

namespace fdsh {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  const long long n = parse_int(key, v);
  if (n < 0) throw ConfigError("config: '" + key + "' must be non-negative");
  return static_cast<std::size_t>(n);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"sim.nodes", [](auto& c, auto& k, auto& v) { c.sim.nodes = static_cast<int>(parse_int(k, v)); }},
      {"sim.ticks", [](auto& c, auto& k, auto& v) { c.sim.ticks = parse_int(k, v); }},
      {"sim.fault_rate", [](auto& c, auto& k, auto& v) { c.sim.fault_rate = parse_double(k, v); }},
      {"sim.seed",
       [](auto& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(parse_count(k, v)); }},
      {"feat.window", [](auto& c, auto& k, auto& v) { c.features.window = parse_count(k, v); }},
      {"feat.embed_dim", [](auto& c, auto& k, auto& v) { c.features.embed_dim = parse_count(k, v); }},
      {"model.hidden", [](auto& c, auto& k, auto& v) { c.hidden = parse_count(k, v); }},
      {"model.latent", [](auto& c, auto& k, auto& v) { c.latent = parse_count(k, v); }},
      {"predict.horizon", [](auto& c, auto& k, auto& v) { c.features.horizon = parse_count(k, v); }},
      {"train.eta", [](auto& c, auto& k, auto& v) { c.eta = parse_double(k, v); }},
      {"train.epochs", [](auto& c, auto& k, auto& v) { c.epochs = static_cast<int>(parse_int(k, v)); }},
      {"train.batch", [](auto& c, auto& k, auto& v) { c.batch = parse_count(k, v); }},
      {"train.C", [](auto& c, auto& k, auto& v) { c.C = parse_double(k, v); }},
      {"train.lambda", [](auto& c, auto& k, auto& v) { c.lambda = parse_double(k, v); }},
      {"rl.alpha", [](auto& c, auto& k, auto& v) { c.alpha = parse_double(k, v); }},
      {"rl.gamma", [](auto& c, auto& k, auto& v) { c.gamma = parse_double(k, v); }},
      {"rl.epsilon_start", [](auto& c, auto& k, auto& v) { c.epsilon_start = parse_double(k, v); }},
      {"rl.epsilon_end", [](auto& c, auto& k, auto& v) { c.epsilon_end = parse_double(k, v); }},
      {"rl.episodes",
       [](auto& c, auto& k, auto& v) { c.episodes = static_cast<int>(parse_int(k, v)); }},
      {"detect.threshold_quantile",
       [](auto& c, auto& k, auto& v) { c.threshold_quantile = parse_double(k, v); }},
  };
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  sim.validate();
  if (sim.ticks < static_cast<std::int64_t>(features.window + features.horizon) * 4) {
    throw ConfigError("config: sim.ticks too small for the window and horizon");
  }
  train_config().validate();
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << "sim.nodes = " << sim.nodes << '\n'
     << "sim.ticks = " << sim.ticks << '\n'
     << "sim.fault_rate = " << fmt(sim.fault_rate) << '\n'
     << "sim.seed = " << seed << '\n'
     << "feat.window = " << features.window << '\n'
     << "feat.embed_dim = " << features.embed_dim << '\n'
     << "model.hidden = " << hidden << '\n'
     << "model.latent = " << latent << '\n'
     << "predict.horizon = " << features.horizon << '\n'
     << "train.eta = " << fmt(eta) << '\n'
     << "train.epochs = " << epochs << '\n'
     << "train.batch = " << batch << '\n'
     << "train.C = " << fmt(C) << '\n'
     << "train.lambda = " << fmt(lambda) << '\n'
     << "rl.alpha = " << fmt(alpha) << '\n'
     << "rl.gamma = " << fmt(gamma) << '\n'
     << "rl.epsilon_start = " << fmt(epsilon_start) << '\n'
     << "rl.epsilon_end = " << fmt(epsilon_end) << '\n'
     << "rl.episodes = " << episodes << '\n'
     << "detect.threshold_quantile = " << fmt(threshold_quantile) << '\n';
  return os.str();
}

std::uint64_t ExperimentConfig::fingerprint() const { return token_hash(canonical()); }

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.eta = eta;
  t.epochs = epochs;
  t.batch_size = batch;
  t.C = C;
  t.lambda = lambda;
  t.seed = seed;
  t.features = features;
  t.hidden = hidden;
  t.latent = latent;
  t.threshold_quantile = threshold_quantile;
  t.q = {alpha, gamma};
  t.epsilon_start = epsilon_start;
  t.epsilon_end = epsilon_end;
  t.rl_episodes = episodes;
  t.rl_horizon = kHealHorizon;
  t.rl_sim = sim;
  t.rl_sim.ticks = kHealHorizon;
  t.config_fingerprint = fingerprint();
  return t;
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "config line " + std::to_string(n);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": missing value for '" + key + "'");
    it->second(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path_or_default) {
  if (path_or_default == "default") {
    ExperimentConfig cfg;
    cfg.validate();
    return cfg;
  }
  std::ifstream is(path_or_default);
  if (!is) throw ConfigError("cannot open config '" + path_or_default + "'");
  return parse_config(is);
}

}  // namespace fdsh
