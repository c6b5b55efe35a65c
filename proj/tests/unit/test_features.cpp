// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "fdsh/errors.hpp"
#include "fdsh/features.hpp"
#include "support.hpp"

using namespace fdsh;

namespace {

Dataset simulate(std::uint64_t seed, std::int64_t ticks = 300, double rate = 0.05) {
  Simulation sim({3, ticks, rate}, seed);
  Dataset d;
  while (!sim.finished()) {
    auto r = sim.step({});
    d.telemetry.insert(d.telemetry.end(), r.telemetry.begin(), r.telemetry.end());
    d.logs.insert(d.logs.end(), r.logs.begin(), r.logs.end());
    d.labels.insert(d.labels.end(), r.labels.begin(), r.labels.end());
  }
  return d;
}

double cosine(const Tensor& a, const Tensor& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

LogRecord record(int tmpl, Severity sev = Severity::Info) {
  return {0, 0, sev, tmpl, template_tokens(tmpl)};
}

}  // namespace

TEST_CASE("normalizer examples") {
  const std::vector<Metrics> s{{0, 0, 0, 0, 0}, {10, 10, 10, 10, 10}};
  const Normalizer n = Normalizer::fit(s);
  CHECK(n.apply(0, 5.0) == 0.5);
  CHECK(n.apply(0, 20.0) == 1.0);
  CHECK(n.apply(0, -3.0) == 0.0);
  CHECK(n.apply(2, 0.0) == 0.0);
}

TEST_CASE("normalizer rejects degenerate input") {
  const std::vector<Metrics> flat{{1, 0, 0, 0, 0}, {1, 1, 1, 1, 1}};
  CHECK_THROWS_AS(Normalizer::fit(flat), DegenerateRangeError);
  const std::vector<Metrics> one{{1, 0, 0, 0, 0}};
  CHECK_THROWS_AS(Normalizer::fit(one), InputError);
}

TEST_CASE("normalized training data lies in [0,1]") {
  const Dataset d = simulate(1);
  const Normalizer n = Normalizer::fit(std::span<const TelemetrySample>(d.telemetry));
  for (const auto& s : d.telemetry) {
    for (double v : n.apply(s.metrics)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("window counts") {
  CHECK(window_count(16, 16) == 1);
  CHECK(window_count(18, 16) == 3);
  CHECK(window_count(10, 16) == 0);
  CHECK(window_count(0, 16) == 0);
}

TEST_CASE("make_windows yields T-n+1 windows per node covering [o, o+n)") {
  const Dataset d = simulate(2, 40);
  const Normalizer norm = Normalizer::fit(std::span<const TelemetrySample>(d.telemetry));
  FeatureConfig cfg;
  const auto windows = make_windows(d, norm, cfg);
  CHECK(windows.size() == 3 * (40 - 16 + 1));
  std::map<int, std::vector<std::int64_t>> ends;
  for (const auto& w : windows) {
    ends[w.node].push_back(w.t_end);
    CHECK(w.x_seq.rows() == 16);
    CHECK(w.x_seq.cols() == kMetricCount);
    CHECK(w.e_text.size() == cfg.embed_dim);
    // first row of the window is tick t_end - n + 1
    const auto& raw = d.telemetry[static_cast<std::size_t>((w.t_end - 15) * 3 + w.node)];
    CHECK(w.x_seq.at(0, 0) == norm.apply(0, raw.metrics[0]));
  }
  for (auto& [node, e] : ends) {
    CHECK(e.front() == 15);
    CHECK(e.back() == 39);
  }
}

TEST_CASE("make_windows rejects unsorted telemetry") {
  Dataset d = simulate(3, 40);
  const Normalizer norm = Normalizer::fit(std::span<const TelemetrySample>(d.telemetry));
  std::swap(d.telemetry[0], d.telemetry[3]);  // node 0, ticks 0 and 1
  CHECK_THROWS_AS(make_windows(d, norm, FeatureConfig{}), OrderError);
}

TEST_CASE("window labels agree with a brute-force scan") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Dataset d = simulate(seed, 200, 0.08);
    const Normalizer norm = Normalizer::fit(std::span<const TelemetrySample>(d.telemetry));
    FeatureConfig cfg;
    for (const auto& w : make_windows(d, norm, cfg)) {
      std::optional<FaultClass> at_end;
      bool any = false;
      std::size_t seen = 0;
      for (const auto& l : d.labels) {
        if (l.node != w.node) continue;
        if (l.t == w.t_end) at_end = l.fault;
        if (l.t > w.t_end && l.t <= w.t_end + static_cast<std::int64_t>(cfg.horizon)) {
          ++seen;
          any = any || l.fault.has_value();
        }
      }
      CHECK(w.label == at_end);
      if (any) {
        CHECK(w.future_fault == std::optional<bool>(true));
      } else if (seen == cfg.horizon) {
        CHECK(w.future_fault == std::optional<bool>(false));
      } else {
        CHECK_FALSE(w.future_fault.has_value());
      }
    }
  }
}

TEST_CASE("embed_text basics") {
  CHECK(bit_equal(embed_text(std::span<const LogRecord>{}, 32), Tensor::zeros(32)));
  const std::vector<LogRecord> a{record(2, Severity::Warn), record(0)};
  const Tensor e1 = embed_text(a, 32);
  const Tensor e2 = embed_text(a, 32);
  CHECK(bit_equal(e1, e2));
  double norm = 0;
  for (double v : e1.values()) norm += v * v;
  CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-12);
}

TEST_CASE("embed_text is permutation invariant") {
  std::vector<LogRecord> recs{record(0), record(3, Severity::Warn), record(6, Severity::Error), record(7)};
  const Tensor ref = embed_text(recs, 32);
  std::sort(recs.begin(), recs.end(), [](const auto& x, const auto& y) { return x.template_id < y.template_id; });
  do {
    const Tensor e = embed_text(recs, 32);
    for (std::size_t i = 0; i < 32; ++i) CHECK(std::abs(e[i] - ref[i]) <= 1e-12);
  } while (std::next_permutation(recs.begin(), recs.end(), [](const auto& x, const auto& y) {
    return x.template_id < y.template_id;
  }));
}

TEST_CASE("distinct templates embed far apart") {
  for (int i = 0; i < kTemplateCount; ++i) {
    for (int j = i + 1; j < kTemplateCount; ++j) {
      const std::vector<LogRecord> a{record(i)}, b{record(j)};
      CAPTURE(i);
      CAPTURE(j);
      CHECK(cosine(embed_text(a, 32), embed_text(b, 32)) < 0.5);
    }
  }
}

TEST_CASE("encode_sequence shape and zero encoder") {
  const Dataset d = simulate(4, 40);
  const Normalizer norm = Normalizer::fit(std::span<const TelemetrySample>(d.telemetry));
  const auto windows = make_windows(d, norm, FeatureConfig{});
  const LstmCellParams zero = LstmCellParams::zeros(kMetricCount, 32);
  Rng rng(4);
  const LstmCellParams enc = LstmCellParams::init(kMetricCount, 32, rng);
  for (const auto& w : windows) {
    const Tensor f0 = encode_sequence(zero, w);
    REQUIRE(f0.size() == 64);
    for (std::size_t i = 0; i < 32; ++i) CHECK(f0[i] == 0.0);
    for (std::size_t i = 0; i < 32; ++i) CHECK(f0[32 + i] == w.e_text[i]);
    CHECK(encode_sequence(enc, w).size() == 64);
  }
}

TEST_CASE("encode_sequence with one row equals one lstm_step") {
  Rng rng(5);
  const LstmCellParams enc = LstmCellParams::init(kMetricCount, 6, rng);
  FeatureWindow w;
  w.x_seq = fdsh::test::random_tensor({1, kMetricCount}, rng, 0.0, 1.0);
  w.e_text = Tensor::zeros(4);
  const Tensor f = encode_sequence(enc, w);
  const LstmState s = lstm_step(enc, LstmState::zeros(6), Tensor::vector({w.x_seq.row(0).begin(), w.x_seq.row(0).end()}));
  for (std::size_t i = 0; i < 6; ++i) CHECK(f[i] == s.h[i]);
}

TEST_CASE("gradient through the encoder matches finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(200 + seed);
    const LstmCellParams enc = LstmCellParams::init(kMetricCount, 5, rng);
    FeatureWindow w;
    w.x_seq = fdsh::test::random_tensor({6, kMetricCount}, rng, 0.0, 1.0);
    w.e_text = fdsh::test::random_tensor({3}, rng);
    const Tensor r = fdsh::test::random_tensor({8}, rng);
    auto loss = [&](const LstmCellParams& p) {
      const Tensor f = encode_sequence(p, w);
      double s = 0;
      for (std::size_t i = 0; i < 8; ++i) s += r[i] * f[i] * f[i];
      return s;
    };
    const EncodedWindow e = encode_sequence_traced(enc, w);
    std::vector<double> df(8);
    for (std::size_t i = 0; i < 8; ++i) df[i] = 2.0 * r[i] * e.features[i];
    LstmCellParams grad = zeros_like(enc);
    encode_sequence_backward(enc, e, df, grad);
    CHECK(fdsh::test::model_grad_error(enc, grad, loss) <= 1e-4);
  }
}
