// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "experiments.hpp"
#include "fdsh/detectors.hpp"
#include "fdsh/errors.hpp"
#include "fdsh/stats.hpp"
#include "support.hpp"

using namespace fdsh;
using fdsh::test::random_tensor;

namespace {

// Per-sample hinge summation written out independently of the library.
double oracle_svm_loss(const SvmModel& m, const std::vector<Tensor>& xs,
                       const std::vector<std::size_t>& ys) {
  double reg = 0.0;
  for (std::size_t c = 0; c < m.classes(); ++c) {
    for (std::size_t d = 0; d < m.dim(); ++d) reg += m.weights.at(c, d) * m.weights.at(c, d);
  }
  double hinge = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t c = 0; c < m.classes(); ++c) {
      double f = m.bias[c];
      for (std::size_t d = 0; d < m.dim(); ++d) f += m.weights.at(c, d) * xs[i][d];
      const double y = ys[i] == c ? 1.0 : -1.0;
      hinge += std::max(0.0, 1.0 - y * f);
    }
  }
  return 0.5 * reg + m.C * hinge;
}

struct SvmBatch {
  SvmModel model;
  std::vector<Tensor> xs;
  std::vector<std::size_t> ys;
};

SvmBatch random_svm(std::uint64_t seed) {
  Rng rng(seed);
  SvmBatch b;
  b.model = SvmModel::zeros(kClassCount, 7, 0.7);
  b.model.weights = random_tensor({kClassCount, 7}, rng);
  b.model.bias = random_tensor({kClassCount}, rng);
  std::uniform_int_distribution<std::size_t> cls(0, kClassCount - 1);
  for (int i = 0; i < 9; ++i) {
    b.xs.push_back(random_tensor({7}, rng));
    b.ys.push_back(cls(rng));
  }
  return b;
}

}  // namespace

TEST_CASE("class indices") {
  CHECK(class_index(std::nullopt) == 0);
  CHECK(class_index(FaultClass::DiskFailure) == 5);
  CHECK(class_name(0) == "Healthy");
  CHECK(class_name(3) == "ServiceCrash");
  CHECK(parse_class_name("MemoryLeak") == std::optional<std::size_t>(2));
  CHECK_FALSE(parse_class_name("nope").has_value());
}

TEST_CASE("svm_loss examples") {
  SvmModel one = SvmModel::zeros(1, 2, 1.0);
  const std::vector<Tensor> x{Tensor::vector({1.0, 0.0})};
  const std::vector<std::size_t> y{0};
  CHECK(svm_loss(one, x, y) == 1.0);
  one.weights = Tensor({1, 2}, {2.0, 0.0});
  CHECK(svm_loss(one, x, y) == 2.0);
  CHECK_THROWS_AS(svm_loss(one, std::vector<Tensor>{}, std::vector<std::size_t>{}), InputError);
  CHECK_THROWS_AS(svm_loss(one, x, std::vector<std::size_t>{3}), InputError);
}

TEST_CASE("svm_loss matches independent hinge summation") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SvmBatch b = random_svm(seed);
    const double got = svm_loss(b.model, b.xs, b.ys);
    CHECK(std::abs(got - oracle_svm_loss(b.model, b.xs, b.ys)) <= 1e-12 * std::max(1.0, got));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("svm gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SvmBatch b = random_svm(seed);
    SvmModel grad = SvmModel::zeros(kClassCount, 7, 0.7);
    svm_loss_grad(b.model, b.xs, b.ys, grad);
    auto loss = [&](const SvmModel& m) { return svm_loss(m, b.xs, b.ys); };
    CHECK(fdsh::test::model_grad_error(b.model, grad, loss) <= 1e-4);
  }
}

TEST_CASE("svm input gradient matches finite differences") {
  const SvmBatch b = random_svm(3);
  SvmModel grad = SvmModel::zeros(kClassCount, 7, 0.7);
  std::vector<Tensor> dxs;
  svm_loss_grad(b.model, b.xs, b.ys, grad, &dxs);
  for (std::size_t i = 0; i < b.xs.size(); ++i) {
    const ScalarFn f = [&](const Tensor& x) {
      auto xs = b.xs;
      xs[i] = x;
      return svm_loss(b.model, xs, b.ys);
    };
    CHECK(grad_check(f, dxs[i], b.xs[i], 1e-5) <= 1e-4);
  }
}

TEST_CASE("svm_classify tie-break and scale invariance") {
  const SvmModel zero = SvmModel::zeros(kClassCount, 4, 1.0);
  Rng rng(1);
  CHECK(svm_classify(zero, random_tensor({4}, rng)).label == 0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SvmBatch b = random_svm(seed);
    SvmModel scaled = b.model;
    for (double& v : scaled.weights.values()) v *= 2.0;
    for (double& v : scaled.bias.values()) v *= 2.0;
    for (const auto& x : b.xs) CHECK(svm_classify(b.model, x).label == svm_classify(scaled, x).label);
  }
  CHECK_THROWS_AS(svm_classify(zero, Tensor::zeros(5)), ShapeError);
}

TEST_CASE("svm separates a linearly separable toy set") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) CHECK(fdsh::test::svm_separable_accuracy(seed) == 1.0);
}

TEST_CASE("ae_loss examples") {
  Rng rng(2);
  AeModel ae = AeModel::init(2, 0.0, rng);
  for (DenseLayer* l : {&ae.enc1, &ae.enc2, &ae.dec1, &ae.dec2}) {
    l->weight.fill(0.0);
    l->bias.fill(0.0);
  }
  CHECK(ae_loss(ae, Tensor::vector({1.0, 0.0})) == 1.0);
  CHECK(ae_loss(ae, Tensor::vector({0.0, 0.0})) == 0.0);
  CHECK(ae_score(ae, Tensor::vector({1.0, 0.0})) == 1.0);
  CHECK_THROWS_AS(ae_loss(ae, Tensor::vector({NAN, 0.0})), NumericError);
}

TEST_CASE("ae loss is nonnegative and its gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(300 + seed);
    const AeModel ae = AeModel::init(5, 1e-2, rng);
    const Tensor x = random_tensor({5}, rng);
    AeModel grad = zeros_like(ae);
    const double l = ae_loss_grad(ae, x, grad);
    CHECK(l >= ae_score(ae, x));
    CHECK(ae_score(ae, x) >= 0.0);
    auto loss = [&](const AeModel& m) { return ae_loss(m, x); };
    CHECK(fdsh::test::model_grad_error(ae, grad, loss) <= 1e-4);
  }
}

TEST_CASE("kl divergence examples and nonnegativity") {
  const std::vector<double> zero{0.0}, one{1.0};
  CHECK(kl_divergence(zero, zero) == 0.0);
  CHECK(kl_divergence(one, zero) == 0.5);
  Rng rng(9);
  std::uniform_real_distribution<double> mu(-5, 5), lv(-20, 20);
  for (int i = 0; i < 100000; ++i) {
    const std::vector<double> m{mu(rng), mu(rng)}, v{lv(rng), lv(rng)};
    CHECK(kl_divergence(m, v) >= 0.0);
  }
  const std::vector<double> tiny{1e-9};
  CHECK(kl_divergence(zero, tiny) > 0.0);
}

TEST_CASE("vae loss is nonnegative and its gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(400 + seed);
    const VaeModel vae = VaeModel::init(5, 3, rng);
    const Tensor x = random_tensor({5}, rng);
    const Tensor noise = fdsh::test::random_normal(3, rng);
    VaeModel grad = zeros_like(vae);
    const double l = vae_loss_grad(vae, x, noise, grad);
    CHECK(l == vae_loss(vae, x, noise));
    const VaeLoss parts = vae_loss_parts(vae, x, noise);
    CHECK(parts.kl >= 0.0);
    CHECK(parts.reconstruction >= 0.0);
    auto loss = [&](const VaeModel& m) { return vae_loss(m, x, noise); };
    CHECK(fdsh::test::model_grad_error(vae, grad, loss) <= 1e-4);
  }
}

TEST_CASE("vae with a prior-matching encoder has zero KL") {
  Rng rng(1);
  VaeModel vae = VaeModel::init(3, 2, rng);
  for (DenseLayer* l : {&vae.enc_mu, &vae.enc_logvar}) {
    l->weight.fill(0.0);
    l->bias.fill(0.0);
  }
  CHECK(vae_loss_parts(vae, random_tensor({3}, rng), Tensor::vector({0.3, -0.2})).kl == 0.0);
}

TEST_CASE("vae negative ELBO falls on a two-blob toy set") {
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    const auto curve = moving_average(fdsh::test::vae_toy_curve(seed, 50), 5);
    CHECK(curve.back() < curve.front());
  }
}

TEST_CASE("fusion examples") {
  const FusionConfig cfg;
  CHECK(fuse(cfg, 0.2, 0.6) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK_FALSE(fuse(cfg, 0.2, 0.6) > cfg.threshold);
  CHECK(fuse(cfg, 0.0, 0.0) == 0.0);
  const Calibration cal{1.0, 1.0};
  const Detection d = fuse_and_detect(cfg, cal, 0.0, 0.0);
  CHECK(d.fused == 0.0);
  CHECK_FALSE(d.flag);
  CHECK_THROWS_AS(fuse_and_detect(cfg, Calibration{}, 0.1, 0.1), StateError);
  FusionConfig bad;
  bad.w_ae = 0.7;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("calibration maps raw scores into [0,1) monotonically") {
  const std::vector<double> healthy{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const Calibration cal = Calibration::fit(healthy, healthy, 0.5);
  CHECK(cal.fitted());
  CHECK(cal.ae(cal.ae_reference) == 0.5);
  CHECK(cal.ae(0.0) == 0.0);
  double prev = -1.0;
  for (double raw = 0.0; raw < 100.0; raw += 0.37) {
    const double s = cal.vae(raw);
    CHECK(s >= prev);
    CHECK(s < 1.0);
    prev = s;
  }
}

TEST_CASE("detection is monotone in each raw score") {
  const FusionConfig cfg;
  const Calibration cal{2.0, 3.0};
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int i = 0; i < 2000; ++i) {
    const double a = u(rng), b = u(rng), da = u(rng), db = u(rng);
    const Detection base = fuse_and_detect(cfg, cal, a, b);
    const Detection up_a = fuse_and_detect(cfg, cal, a + da, b);
    const Detection up_b = fuse_and_detect(cfg, cal, a, b + db);
    CHECK(up_a.fused >= base.fused);
    CHECK(up_b.fused >= base.fused);
    CHECK((!base.flag || up_a.flag));
    CHECK((!base.flag || up_b.flag));
  }
}

TEST_CASE("autoencoder separates metric spikes from healthy samples") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = fdsh::test::ae_spike_experiment(seed);
    for (double s : r.spike_scores) CHECK(s > r.healthy_median);
  }
}

TEST_CASE("scores csv round-trips") {
  const std::vector<WindowScore> rows{{15, 0, 3, 0.25, 1.5, 0.75, true}, {16, 2, 0, 0.0, 0.1, 0.01, false}};
  std::stringstream ss;
  write_scores_csv(ss, rows);
  CHECK(ss.str().rfind("t,node,svm_class,ae_score,vae_score,fused,flag\n", 0) == 0);
  CHECK(ss.str().find("ServiceCrash") != std::string::npos);
  const auto back = read_scores_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].svm_class == 3);
  CHECK(back[0].flag);
  CHECK(back[1].vae_score == 0.1);
  std::stringstream bad("t,node,svm_class,ae_score,vae_score,fused,flag\n1,0,Bogus,0,0,0,0\n");
  CHECK_THROWS_AS(read_scores_csv(bad), ParseError);
}
