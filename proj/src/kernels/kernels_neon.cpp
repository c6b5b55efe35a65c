// SPDX-License-Identifier: Apache-2.0
//
// AArch64 NEON variants (two double lanes). NEON is mandatory on AArch64, so
// no runtime probe is needed beyond the compile-time guard.
#include "kernels_internal.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

namespace fdsh::kernels::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_neon(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_neon(w + r * cols, x, cols);
}

void gemv_t_acc_neon(const double* w, const double* v, double* y, std::size_t rows,
                     std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_neon(v[r], w + r * cols, y, cols);
}

void ger_acc_neon(const double* u, const double* v, double* a, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_neon(u[r], v, a + r * cols, cols);
}

double sum_squares_neon(const double* x, std::size_t n) { return dot_neon(x, x, n); }

constexpr KernelTable kNeon{
    "neon",       dot_neon,        axpy_neon,       gemv_neon, gemv_t_acc_neon,
    ger_acc_neon, sum_squares_neon,
};

}  // namespace

const KernelTable* compiled_neon_table() noexcept { return &kNeon; }

}  // namespace fdsh::kernels::detail

#else

namespace fdsh::kernels::detail {
const KernelTable* compiled_neon_table() noexcept { return nullptr; }
}  // namespace fdsh::kernels::detail

#endif
