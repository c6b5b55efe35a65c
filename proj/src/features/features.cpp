// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>

#include "fdsh/errors.hpp"
#include "fdsh/features.hpp"
#include "fdsh/kernels.hpp"

namespace fdsh {
namespace {

double severity_weight(Severity s) noexcept {
  switch (s) {
    case Severity::Info:
      return 1.0;
    case Severity::Warn:
      return 2.0;
    case Severity::Error:
      return 4.0;
  }
  return 1.0;
}

// splitmix64 finalizer; FNV-1a alone leaves the low bits of short tokens
// poorly mixed and several templates collided in 32 buckets.
std::uint64_t mix(std::uint64_t h) noexcept {
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

void add_record(const LogRecord& r, Tensor& e) {
  const double w = severity_weight(r.severity);
  for (const auto& tok : r.tokens) {
    const std::uint64_t h = mix(token_hash(tok));
    const std::size_t bucket = static_cast<std::size_t>((h >> 32) % e.size());
    const double sign = (h & 1U) != 0 ? -1.0 : 1.0;
    e[bucket] += sign * w;
  }
}

void normalize_l2(Tensor& e) {
  const double norm = std::sqrt(kernels::sum_squares(e.values()));
  if (norm == 0.0) return;
  for (double& v : e.values()) v /= norm;
}

}  // namespace

void FeatureConfig::validate() const {
  if (window < 1) throw ConfigError("features: window must be >= 1");
  if (embed_dim < 1) throw ConfigError("features: embed_dim must be >= 1");
  if (horizon < 1) throw ConfigError("features: horizon must be >= 1");
}

std::uint64_t token_hash(std::string_view token) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : token) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---- Normalizer ----

Normalizer::Normalizer(Metrics min, Metrics max) : min_(min), max_(max) {
  for (std::size_t k = 0; k < kMetricCount; ++k) {
    if (!(max_[k] > min_[k])) {
      throw DegenerateRangeError("normalizer: metric " + std::to_string(k) + " has an empty range");
    }
  }
}

Normalizer Normalizer::fit(std::span<const Metrics> samples) {
  if (samples.size() < 2) throw InputError("normalizer: need at least 2 samples");
  Metrics lo = samples.front();
  Metrics hi = samples.front();
  for (const Metrics& m : samples) {
    for (std::size_t k = 0; k < kMetricCount; ++k) {
      lo[k] = std::min(lo[k], m[k]);
      hi[k] = std::max(hi[k], m[k]);
    }
  }
  return Normalizer(lo, hi);
}

Normalizer Normalizer::fit(std::span<const TelemetrySample> samples) {
  std::vector<Metrics> m;
  m.reserve(samples.size());
  for (const auto& s : samples) m.push_back(s.metrics);
  return fit(std::span<const Metrics>(m));
}

double Normalizer::apply(std::size_t metric, double value) const {
  if (!(max_[metric] > min_[metric])) throw StateError("normalizer used before fit");
  return std::clamp((value - min_[metric]) / (max_[metric] - min_[metric]), 0.0, 1.0);
}

Metrics Normalizer::apply(const Metrics& m) const {
  Metrics out{};
  for (std::size_t k = 0; k < kMetricCount; ++k) out[k] = apply(k, m[k]);
  return out;
}

TelemetrySample Normalizer::apply(const TelemetrySample& s) const {
  return {s.t, s.node, apply(s.metrics)};
}

// ---- windows ----

std::size_t window_count(std::size_t length, std::size_t n) noexcept {
  return length >= n ? length - n + 1 : 0;
}

std::vector<FeatureWindow> make_windows(const Dataset& data, const Normalizer& norm,
                                        const FeatureConfig& cfg) {
  cfg.validate();
  std::map<int, std::vector<const TelemetrySample*>> series;
  for (const auto& s : data.telemetry) {
    auto& v = series[s.node];
    if (!v.empty() && v.back()->t >= s.t) {
      throw OrderError("telemetry for node " + std::to_string(s.node) + " is not time-sorted at t=" +
                       std::to_string(s.t));
    }
    v.push_back(&s);
  }
  std::map<int, std::map<std::int64_t, std::optional<FaultClass>>> labels;
  for (const auto& l : data.labels) labels[l.node][l.t] = l.fault;
  std::map<int, std::vector<const LogRecord*>> logs;
  for (const auto& r : data.logs) logs[r.node].push_back(&r);
  for (auto& [node, v] : logs) {
    std::stable_sort(v.begin(), v.end(),
                     [](const LogRecord* a, const LogRecord* b) { return a->t < b->t; });
  }

  std::vector<FeatureWindow> out;
  for (const auto& [node, samples] : series) {
    const auto& node_logs = logs[node];
    const auto& node_labels = labels[node];
    const std::size_t count = window_count(samples.size(), cfg.window);
    for (std::size_t o = 0; o < count; ++o) {
      FeatureWindow w;
      w.node = node;
      w.t_end = samples[o + cfg.window - 1]->t;
      const std::int64_t t_start = samples[o]->t;
      w.x_seq = Tensor::zeros(cfg.window, kMetricCount);
      for (std::size_t r = 0; r < cfg.window; ++r) {
        const Metrics m = norm.apply(samples[o + r]->metrics);
        std::copy(m.begin(), m.end(), w.x_seq.row(r).begin());
      }
      const auto lo = std::lower_bound(node_logs.begin(), node_logs.end(), t_start,
                                       [](const LogRecord* r, std::int64_t t) { return r->t < t; });
      const auto hi = std::upper_bound(node_logs.begin(), node_logs.end(), w.t_end,
                                       [](std::int64_t t, const LogRecord* r) { return t < r->t; });
      w.e_text = embed_text(std::span<const LogRecord* const>(lo, hi), cfg.embed_dim);
      if (const auto it = node_labels.find(w.t_end); it != node_labels.end()) w.label = it->second;
      bool any = false;
      bool complete = true;
      for (std::int64_t t = w.t_end + 1; t <= w.t_end + static_cast<std::int64_t>(cfg.horizon); ++t) {
        const auto it = node_labels.find(t);
        if (it == node_labels.end()) {
          complete = false;
          break;
        }
        any = any || it->second.has_value();
      }
      if (complete || any) w.future_fault = any;
      out.push_back(std::move(w));
    }
  }
  return out;
}

// ---- text embedding ----

Tensor embed_text(std::span<const LogRecord> records, std::size_t dim) {
  if (dim == 0) throw ConfigError("embed_text: dimension must be positive");
  Tensor e = Tensor::zeros(dim);
  for (const auto& r : records) add_record(r, e);
  normalize_l2(e);
  return e;
}

Tensor embed_text(std::span<const LogRecord* const> records, std::size_t dim) {
  if (dim == 0) throw ConfigError("embed_text: dimension must be positive");
  Tensor e = Tensor::zeros(dim);
  for (const LogRecord* r : records) add_record(*r, e);
  normalize_l2(e);
  return e;
}

// ---- sequence encoding ----

Tensor encode_sequence(const LstmCellParams& encoder, const FeatureWindow& window) {
  return encode_sequence_traced(encoder, window).features;
}

EncodedWindow encode_sequence_traced(const LstmCellParams& encoder, const FeatureWindow& window) {
  if (window.x_seq.rank() != 2 || window.x_seq.cols() != encoder.input_dim()) {
    throw ShapeError("encode_sequence: window " + shape_string(window.x_seq.dims()) +
                     " does not match encoder input " + std::to_string(encoder.input_dim()));
  }
  EncodedWindow out;
  out.trace = lstm_forward(encoder, window.x_seq);
  const auto h = out.trace.final_hidden();
  std::vector<double> f(h.begin(), h.end());
  f.insert(f.end(), window.e_text.values().begin(), window.e_text.values().end());
  out.features = Tensor::vector(std::move(f));
  return out;
}

void encode_sequence_backward(const LstmCellParams& encoder, const EncodedWindow& encoded,
                              std::span<const double> d_features, LstmCellParams& grad) {
  const std::size_t hidden = encoder.hidden_dim();
  if (d_features.size() != encoded.features.size()) {
    throw ShapeError("encode_sequence_backward: gradient size mismatch");
  }
  lstm_backward(encoder, encoded.trace, d_features.first(hidden), grad);
}

}  // namespace fdsh
