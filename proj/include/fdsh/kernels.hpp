// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense double-precision inner loops used by every model in the library.
//
// Each kernel has a portable scalar reference implementation and optional
// vector variants (AVX2+FMA on x86-64, NEON on AArch64). The variant is picked
// once per process from the CPU's capabilities; the FDSH_KERNELS environment
// variable ("scalar", "avx2", "neon") overrides the choice. All variants agree
// with the reference to rounding error; they do not promise bit equality,
// since vector reductions reassociate sums.

#include <cstddef>
#include <span>
#include <string_view>

namespace fdsh::kernels {

struct KernelTable {
  std::string_view name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = W x, W row-major (rows x cols)
  void (*gemv)(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols);
  // y += W^T v
  void (*gemv_t_acc)(const double* w, const double* v, double* y, std::size_t rows,
                     std::size_t cols);
  // A += u v^T, A row-major (rows x cols)
  void (*ger_acc)(const double* u, const double* v, double* a, std::size_t rows,
                  std::size_t cols);
  // sum_i x[i]^2
  double (*sum_squares)(const double* x, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

/// Null when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

/// The table selected for this process.
const KernelTable& active() noexcept;

// Span front-ends over the active table. Sizes are the caller's contract;
// they are checked in debug builds only.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(std::span<const double> w, std::span<const double> x, std::span<double> y);
void gemv_t_acc(std::span<const double> w, std::span<const double> v, std::span<double> y);
void ger_acc(std::span<const double> u, std::span<const double> v, std::span<double> a);
double sum_squares(std::span<const double> x);

}  // namespace fdsh::kernels
