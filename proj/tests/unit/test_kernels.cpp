// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fdsh/kernels.hpp"
#include "support.hpp"

using namespace fdsh;

namespace {

std::vector<const kernels::KernelTable*> vector_tables() {
  std::vector<const kernels::KernelTable*> out;
  if (const auto* t = kernels::avx2_table()) out.push_back(t);
  if (const auto* t = kernels::neon_table()) out.push_back(t);
  return out;
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

void close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol);
}

}  // namespace

TEST_CASE("scalar kernels match hand-written loops") {
  const auto& s = kernels::scalar_table();
  const std::vector<double> a{1, 2, 3}, b{4, -5, 6};
  CHECK(s.dot(a.data(), b.data(), 3) == 12.0);
  CHECK(s.sum_squares(a.data(), 3) == 14.0);
  std::vector<double> y{1, 1, 1};
  s.axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, 5, 7});
  const std::vector<double> w{1, 2, 3, 4, 5, 6};  // 2x3
  std::vector<double> out(2);
  s.gemv(w.data(), a.data(), out.data(), 2, 3);
  CHECK(out == std::vector<double>{14, 32});
  std::vector<double> t{0, 0, 0};
  const std::vector<double> v{1, -1};
  s.gemv_t_acc(w.data(), v.data(), t.data(), 2, 3);
  CHECK(t == std::vector<double>{-3, -3, -3});
  std::vector<double> m(6, 0.0);
  s.ger_acc(v.data(), a.data(), m.data(), 2, 3);
  CHECK(m == std::vector<double>{1, 2, 3, -1, -2, -3});
}

TEST_CASE("vector kernels agree with the scalar reference") {
  const auto& ref = kernels::scalar_table();
  Rng rng(7);
  for (const auto* vt : vector_tables()) {
    CAPTURE(vt->name);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 37u, 128u}) {
      const auto a = random_vec(n, rng);
      const auto b = random_vec(n, rng);
      const double tol = 1e-12 * (1.0 + static_cast<double>(n));
      CHECK(std::abs(vt->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= tol);
      CHECK(std::abs(vt->sum_squares(a.data(), n) - ref.sum_squares(a.data(), n)) <= tol);
      auto y1 = b, y2 = b;
      vt->axpy(0.75, a.data(), y1.data(), n);
      ref.axpy(0.75, a.data(), y2.data(), n);
      close(y1, y2, 1e-14);
    }
    for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{1, 1}, {3, 5}, {8, 4}, {128, 37},
                              {5, 64}}) {
      const auto w = random_vec(rows * cols, rng);
      const auto x = random_vec(cols, rng);
      const auto v = random_vec(rows, rng);
      const double tol = 1e-12 * (1.0 + static_cast<double>(rows + cols));
      std::vector<double> y1(rows), y2(rows);
      vt->gemv(w.data(), x.data(), y1.data(), rows, cols);
      ref.gemv(w.data(), x.data(), y2.data(), rows, cols);
      close(y1, y2, tol);
      std::vector<double> t1(cols, 0.5), t2(cols, 0.5);
      vt->gemv_t_acc(w.data(), v.data(), t1.data(), rows, cols);
      ref.gemv_t_acc(w.data(), v.data(), t2.data(), rows, cols);
      close(t1, t2, tol);
      auto m1 = w, m2 = w;
      vt->ger_acc(v.data(), x.data(), m1.data(), rows, cols);
      ref.ger_acc(v.data(), x.data(), m2.data(), rows, cols);
      close(m1, m2, 1e-14);
    }
  }
}

TEST_CASE("the active table is one of the known variants") {
  const auto name = kernels::active().name;
  CHECK((name == "scalar" || name == "avx2" || name == "neon"));
}
