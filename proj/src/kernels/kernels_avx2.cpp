// SPDX-License-Identifier: Apache-2.0
//
// AVX2 + FMA variants. This file is compiled with -mavx2 -mfma on x86-64 and
// must not be entered unless the dispatcher confirmed CPU support.
#include "kernels_internal.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace fdsh::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_avx2(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_avx2(w + r * cols, x, cols);
}

void gemv_t_acc_avx2(const double* w, const double* v, double* y, std::size_t rows,
                     std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(v[r], w + r * cols, y, cols);
}

void ger_acc_avx2(const double* u, const double* v, double* a, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(u[r], v, a + r * cols, cols);
}

double sum_squares_avx2(const double* x, std::size_t n) { return dot_avx2(x, x, n); }

constexpr KernelTable kAvx2{
    "avx2",       dot_avx2,        axpy_avx2,       gemv_avx2, gemv_t_acc_avx2,
    ger_acc_avx2, sum_squares_avx2,
};

}  // namespace

const KernelTable* compiled_avx2_table() noexcept { return &kAvx2; }

}  // namespace fdsh::kernels::detail

#else

namespace fdsh::kernels::detail {
const KernelTable* compiled_avx2_table() noexcept { return nullptr; }
}  // namespace fdsh::kernels::detail

#endif
