// SPDX-License-Identifier: Apache-2.0
#pragma once

// Model inputs from raw cluster observations: min-max normalization, sliding
// windows, a hashed bag-of-tokens log embedding and LSTM sequence encoding.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fdsh/cluster_sim.hpp"
#include "fdsh/nn.hpp"
#include "fdsh/tensor.hpp"

namespace fdsh {

struct FeatureConfig {
  std::size_t window = 16;    // n
  std::size_t embed_dim = 32; // d_text
  std::size_t horizon = 5;    // k, look-ahead of the failure target

  void validate() const;
};

/// Per-metric affine map onto [0,1] fitted on a training range.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(Metrics min, Metrics max);

  /// Requires at least two samples and a non-constant column for every metric.
  static Normalizer fit(std::span<const Metrics> samples);
  static Normalizer fit(std::span<const TelemetrySample> samples);

  double apply(std::size_t metric, double value) const;
  Metrics apply(const Metrics& m) const;
  TelemetrySample apply(const TelemetrySample& s) const;

  const Metrics& min() const noexcept { return min_; }
  const Metrics& max() const noexcept { return max_; }

 private:
  Metrics min_{};
  Metrics max_{};
};

struct FeatureWindow {
  std::int64_t t_end = 0;  // last tick covered
  int node = 0;
  Tensor x_seq;   // (n, kMetricCount), normalized
  Tensor e_text;  // (d_text)
  std::optional<FaultClass> label;   // fault active at t_end
  std::optional<bool> future_fault;  // any fault in (t_end, t_end + k]; unset near the stream end
};

/// Raw observations of one run, as read from the JSON-lines files.
struct Dataset {
  std::vector<TelemetrySample> telemetry;
  std::vector<LogRecord> logs;
  std::vector<LabelRecord> labels;
};

/// Offsets of stride-1 windows of length n over a length-T sequence.
std::size_t window_count(std::size_t length, std::size_t n) noexcept;

/// Builds every stride-1 window of every node. Telemetry must be strictly
/// increasing in t per node (OrderError otherwise).
std::vector<FeatureWindow> make_windows(const Dataset& data, const Normalizer& norm,
                                        const FeatureConfig& cfg);

/// Signed feature hashing of log tokens, severity-weighted (INFO 1, WARN 2,
/// ERROR 4), L2-normalized. Zero vector for no records.
Tensor embed_text(std::span<const LogRecord> records, std::size_t dim);
Tensor embed_text(std::span<const LogRecord* const> records, std::size_t dim);

/// [h_n || e_text] from running the encoder over the window from the zero state.
Tensor encode_sequence(const LstmCellParams& encoder, const FeatureWindow& window);

/// Forward pass retained for backpropagation into the encoder.
struct EncodedWindow {
  LstmTrace trace;
  Tensor features;  // [h_n || e_text]
};
EncodedWindow encode_sequence_traced(const LstmCellParams& encoder, const FeatureWindow& window);

/// Pushes dL/dfeatures back through the encoder (the e_text part carries no parameters).
void encode_sequence_backward(const LstmCellParams& encoder, const EncodedWindow& encoded,
                              std::span<const double> d_features, LstmCellParams& grad);

/// 64-bit FNV-1a, the token hash behind embed_text.
std::uint64_t token_hash(std::string_view token) noexcept;

}  // namespace fdsh
