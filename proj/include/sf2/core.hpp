// Copyright 2026 The sf2lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SF2_CORE_HPP
#define SF2_CORE_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sf2/error.hpp"

namespace sf2 {

template <typename T>
concept Real = std::floating_point<T>;

template <Real T>
using Vector = std::vector<T>;

/// Dense row-major matrix. Storage length is always rows * cols.
template <Real T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      fail(ErrorKind::InvariantViolation, "matrix storage does not match shape");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  T operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <Real T>
T dot(std::span<const T> a, std::span<const T> b) {
  assert(a.size() == b.size());
  T acc = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <Real T>
T norm2(std::span<const T> v) {
  return std::sqrt(dot<T>(v, v));
}

template <Real T>
bool all_finite(std::span<const T> v) {
  return std::all_of(v.begin(), v.end(), [](T x) { return std::isfinite(x); });
}

template <Real T>
void require_finite(std::span<const T> v, const char* what) {
  if (!all_finite(v)) fail(ErrorKind::NonFinite, std::string("non-finite value in ") + what);
}

inline constexpr double kZeroNorm = 1e-12;
inline constexpr double kAcosClamp = 1e-12;

/// Vector with unit L2 norm. Only l2_normalize produces one.
template <Real T>
class UnitVector {
 public:
  std::span<const T> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  T operator[](std::size_t i) const { return values_[i]; }
  operator std::span<const T>() const { return values_; }

 private:
  explicit UnitVector(std::vector<T> v) : values_(std::move(v)) {}
  template <Real U>
  friend UnitVector<U> l2_normalize(std::span<const U> v);

  std::vector<T> values_;
};

template <Real T>
UnitVector<T> l2_normalize(std::span<const T> v) {
  const T n = norm2(v);
  if (!std::isfinite(n)) fail(ErrorKind::NonFinite, "l2_normalize: non-finite input");
  if (n <= T(kZeroNorm)) fail(ErrorKind::ZeroVector, "l2_normalize: norm below 1e-12");
  std::vector<T> out(v.begin(), v.end());
  for (auto& x : out) x /= n;
  return UnitVector<T>(std::move(out));
}

template <Real T>
UnitVector<T> l2_normalize(const std::vector<T>& v) {
  return l2_normalize(std::span<const T>(v));
}

/// In-place variant for matrix rows; returns the pre-normalization norm.
template <Real T>
T normalize_in_place(std::span<T> v) {
  const T n = norm2(std::span<const T>(v));
  if (!std::isfinite(n)) fail(ErrorKind::NonFinite, "normalize: non-finite input");
  if (n <= T(kZeroNorm)) fail(ErrorKind::ZeroVector, "normalize: norm below 1e-12");
  for (auto& x : v) x /= n;
  return n;
}

template <Real T>
T cosine(std::span<const T> u, std::span<const T> v) {
  const T nu = norm2(u);
  const T nv = norm2(v);
  if (nu <= T(kZeroNorm) || nv <= T(kZeroNorm))
    fail(ErrorKind::ZeroVector, "cosine: norm below 1e-12");
  return std::clamp(dot(u, v) / (nu * nv), T(-1), T(1));
}

template <Real T>
T cosine(const std::vector<T>& u, const std::vector<T>& v) {
  return cosine(std::span<const T>(u), std::span<const T>(v));
}

/// arccos on a cosine pulled inside (-1, 1) so that d(acos)/dz stays finite.
template <Real T>
T safe_acos(T z) {
  return std::acos(std::clamp(z, T(-1) + T(kAcosClamp), T(1) - T(kAcosClamp)));
}

/// Largest coordinate-wise relative error between an analytic gradient and a
/// central difference, |a - n| / max(1, |a|, |n|).
template <Real T>
T grad_check(const std::function<T(std::span<const T>)>& f,
             std::span<const T> analytic, std::span<const T> x, T eps) {
  if (analytic.size() != x.size())
    fail(ErrorKind::DomainError, "grad_check: gradient and point differ in length");
  if (!(eps >= T(1e-7) && eps <= T(1e-3)))
    fail(ErrorKind::DomainError, "grad_check: eps must lie in [1e-7, 1e-3]");
  std::vector<T> probe(x.begin(), x.end());
  T worst = T(0);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const T saved = probe[i];
    probe[i] = saved + eps;
    const T up = f(probe);
    probe[i] = saved - eps;
    const T down = f(probe);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down) || !std::isfinite(analytic[i]))
      fail(ErrorKind::NonFinite, "grad_check: non-finite evaluation at coordinate " +
                                     std::to_string(i));
    const T numeric = (up - down) / (T(2) * eps);
    const T a = analytic[i];
    const T rel = std::abs(a - numeric) / std::max({T(1), std::abs(a), std::abs(numeric)});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace sf2

#endif  // SF2_CORE_HPP
