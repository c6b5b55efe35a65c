// SPDX-License-Identifier: Apache-2.0
#include <cassert>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace fdsh::kernels {
namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() noexcept {
  const KernelTable* avx2 = avx2_table();
  const KernelTable* neon = neon_table();
  if (const char* forced = std::getenv("FDSH_KERNELS")) {
    const std::string_view want(forced);
    if (want == "scalar") return scalar_table();
    if (want == "avx2" && avx2 != nullptr) return *avx2;
    if (want == "neon" && neon != nullptr) return *neon;
  }
  if (avx2 != nullptr) return *avx2;
  if (neon != nullptr) return *neon;
  return scalar_table();
}

}  // namespace

const KernelTable* avx2_table() noexcept {
  static const KernelTable* table = cpu_has_avx2_fma() ? detail::compiled_avx2_table() : nullptr;
  return table;
}

const KernelTable* neon_table() noexcept { return detail::compiled_neon_table(); }

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(std::span<const double> w, std::span<const double> x, std::span<double> y) {
  assert(w.size() == x.size() * y.size());
  active().gemv(w.data(), x.data(), y.data(), y.size(), x.size());
}

void gemv_t_acc(std::span<const double> w, std::span<const double> v, std::span<double> y) {
  assert(w.size() == v.size() * y.size());
  active().gemv_t_acc(w.data(), v.data(), y.data(), v.size(), y.size());
}

void ger_acc(std::span<const double> u, std::span<const double> v, std::span<double> a) {
  assert(a.size() == u.size() * v.size());
  active().ger_acc(u.data(), v.data(), a.data(), u.size(), v.size());
}

double sum_squares(std::span<const double> x) {
  return active().sum_squares(x.data(), x.size());
}

}  // namespace fdsh::kernels
