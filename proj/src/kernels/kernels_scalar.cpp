// SPDX-License-Identifier: Apache-2.0
#include "kernels_internal.hpp"

namespace fdsh::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* w, const double* x, double* y, std::size_t rows,
                 std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(w + r * cols, x, cols);
}

void gemv_t_acc_scalar(const double* w, const double* v, double* y, std::size_t rows,
                       std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(v[r], w + r * cols, y, cols);
}

void ger_acc_scalar(const double* u, const double* v, double* a, std::size_t rows,
                    std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(u[r], v, a + r * cols, cols);
}

double sum_squares_scalar(const double* x, std::size_t n) { return dot_scalar(x, x, n); }

constexpr KernelTable kScalar{
    "scalar",      dot_scalar,     axpy_scalar,       gemv_scalar, gemv_t_acc_scalar,
    ger_acc_scalar, sum_squares_scalar,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace fdsh::kernels
