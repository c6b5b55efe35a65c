// SPDX-License-Identifier: Apache-2.0
#include "fdsh/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "fdsh/errors.hpp"

namespace fdsh {
namespace {

std::size_t element_count(const std::vector<std::size_t>& dims) {
  if (dims.empty()) throw ShapeError("tensor must have at least one dimension");
  for (std::size_t d : dims) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(dims));
  }
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)), values_(element_count(dims_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  if (element_count(dims_) != values_.size()) {
    throw ShapeError("shape " + shape_string(dims_) + " does not match " +
                     std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

void Tensor::fill(double v) noexcept { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string shape_string(const std::vector<std::size_t>& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + ")";
}

void require_shape(const Tensor& t, const std::vector<std::size_t>& dims, const char* what) {
  if (t.dims() != dims) {
    throw ShapeError(std::string(what) + ": expected " + shape_string(dims) + ", got " +
                     shape_string(t.dims()));
  }
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1) throw ShapeError("concat expects rank-1 tensors");
  std::vector<double> v(a.values().begin(), a.values().end());
  v.insert(v.end(), b.values().begin(), b.values().end());
  return Tensor::vector(std::move(v));
}

bool bit_equal(const Tensor& a, const Tensor& b) noexcept {
  return a.dims() == b.dims() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace fdsh
