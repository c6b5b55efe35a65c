// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fdsh {

/// Dense row-major array of doubles with explicit dimensions.
class Tensor {
 public:
  Tensor() = default;
  /// Zero-filled tensor of the given shape. Every dimension must be positive.
  explicit Tensor(std::vector<std::size_t> dims);
  Tensor(std::vector<std::size_t> dims, std::vector<double> values);

  static Tensor vector(std::vector<double> values);
  static Tensor zeros(std::size_t n) { return Tensor({n}); }
  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::size_t rows() const noexcept { return dims_.empty() ? 0 : dims_[0]; }
  std::size_t cols() const noexcept { return dims_.size() < 2 ? 1 : dims_[1]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& at(std::size_t r, std::size_t c) noexcept { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const noexcept { return values_[r * cols() + c]; }

  /// Row r of a rank-2 tensor.
  std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(values_).subspan(r * cols(), cols());
  }
  std::span<double> row(std::size_t r) noexcept {
    return std::span<double>(values_).subspan(r * cols(), cols());
  }

  void fill(double v) noexcept;
  bool all_finite() const noexcept;
  bool same_shape(const Tensor& other) const noexcept { return dims_ == other.dims_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> values_;
};

std::string shape_string(const std::vector<std::size_t>& dims);

/// Throws ShapeError with `what` when the shapes differ.
void require_shape(const Tensor& t, const std::vector<std::size_t>& dims, const char* what);

/// Concatenation of rank-1 tensors.
Tensor concat(const Tensor& a, const Tensor& b);

/// Bitwise equality of values (distinguishes -0.0 / 0.0, matches NaN payloads).
bool bit_equal(const Tensor& a, const Tensor& b) noexcept;

}  // namespace fdsh
