// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "fdsh/detectors.hpp"
#include "fdsh/errors.hpp"
#include "fdsh/stats.hpp"

namespace fdsh {
namespace {

double calibrate(double raw, double reference) {
  if (!(reference > 0.0)) throw StateError("detector scores used before calibration");
  if (!(raw >= 0.0)) {
    if (std::isnan(raw)) throw NumericError("non-finite anomaly score");
    raw = 0.0;
  }
  if (std::isinf(raw)) return 1.0;
  return raw / (raw + reference);
}

double positive_reference(std::span<const double> raw, double q, const char* what) {
  const double r = quantile(raw, q);
  if (!std::isfinite(r)) throw NumericError(std::string(what) + ": non-finite calibration reference");
  // An all-zero healthy sample would leave every score at 0; keep the map defined.
  return std::max(r, 1e-12);
}

}  // namespace

void FusionConfig::validate() const {
  if (!(w_ae >= 0.0) || !(w_vae >= 0.0)) throw ConfigError("fusion: weights must be >= 0");
  if (std::abs(w_ae + w_vae - 1.0) > 1e-12) throw ConfigError("fusion: weights must sum to 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("fusion: threshold must be in [0,1]");
  if (!(quantile > 0.0 && quantile < 1.0)) throw ConfigError("fusion: quantile must be in (0,1)");
}

Calibration Calibration::fit(std::span<const double> ae_raw, std::span<const double> vae_raw,
                             double q) {
  if (ae_raw.empty() || vae_raw.empty()) throw InputError("calibration: no healthy scores");
  return {positive_reference(ae_raw, q, "ae"), positive_reference(vae_raw, q, "vae")};
}

double Calibration::ae(double raw) const { return calibrate(raw, ae_reference); }
double Calibration::vae(double raw) const { return calibrate(raw, vae_reference); }

double fuse(const FusionConfig& cfg, double s_ae, double s_vae) {
  return std::clamp(cfg.w_ae * s_ae + cfg.w_vae * s_vae, 0.0, 1.0);
}

Detection fuse_and_detect(const FusionConfig& cfg, const Calibration& calibration, double ae_raw,
                          double vae_raw) {
  if (!calibration.fitted()) throw StateError("fuse_and_detect: calibration missing");
  const double f = fuse(cfg, calibration.ae(ae_raw), calibration.vae(vae_raw));
  return {f, f > cfg.threshold};
}

double fit_threshold(std::span<const double> healthy_fused, double q) {
  if (healthy_fused.empty()) throw InputError("fit_threshold: no healthy scores");
  return std::clamp(quantile(healthy_fused, q), 0.0, 1.0);
}

WindowScore score_window(const DetectorStack& stack, const FeatureWindow& window) {
  const Tensor x = encode_sequence(stack.encoder, window);
  WindowScore s;
  s.t = window.t_end;
  s.node = window.node;
  s.svm_class = svm_classify(stack.svm, x).label;
  s.ae_score = ae_score(stack.ae, x);
  s.vae_score = vae_score(stack.vae, x);
  const Detection d = fuse_and_detect(stack.fusion, stack.calibration, s.ae_score, s.vae_score);
  s.fused = d.fused;
  s.flag = d.flag;
  return s;
}

void write_scores_csv(std::ostream& os, std::span<const WindowScore> rows) {
  os << "t,node,svm_class,ae_score,vae_score,fused,flag\n";
  const auto old = os.precision(17);
  for (const auto& r : rows) {
    os << r.t << ',' << r.node << ',' << class_name(r.svm_class) << ',' << r.ae_score << ','
       << r.vae_score << ',' << r.fused << ',' << (r.flag ? 1 : 0) << '\n';
  }
  os.precision(old);
}

std::vector<WindowScore> read_scores_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("scores csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,node,svm_class,ae_score,vae_score,fused,flag") {
    throw ParseError("scores csv: unexpected header '" + line + "'");
  }
  std::vector<WindowScore> out;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    const std::string where = "scores csv line " + std::to_string(n);
    if (f.size() != 7) throw ParseError(where + ": expected 7 fields");
    WindowScore r;
    try {
      std::size_t used = 0;
      r.t = std::stoll(f[0], &used);
      r.node = std::stoi(f[1]);
      const auto cls = parse_class_name(f[2]);
      if (!cls) throw ParseError(where + ": unknown class '" + f[2] + "'");
      r.svm_class = *cls;
      r.ae_score = std::stod(f[3]);
      r.vae_score = std::stod(f[4]);
      r.fused = std::stod(f[5]);
      if (f[6] != "0" && f[6] != "1") throw ParseError(where + ": flag must be 0 or 1");
      r.flag = f[6] == "1";
    } catch (const std::logic_error&) {
      throw ParseError(where + ": malformed number");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace fdsh
