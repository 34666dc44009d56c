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

#ifndef SF2_GRADCHECK_HPP
#define SF2_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sf2/core.hpp"
#include "sf2/error.hpp"
#include "sf2/losses.hpp"
#include "sf2/model.hpp"
#include "sf2/rng.hpp"

namespace sf2 {

inline constexpr double kGradCheckEps = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-6;

namespace detail {

inline std::vector<double> uniform_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline ProtoBatch<double> normal_batch(Rng& rng, std::size_t n, std::size_t m, std::size_t d) {
  ProtoBatch<double> b(n, m, d);
  for (auto& v : b.data) v = rng.normal();
  return b;
}

inline double check_one(const LossSpec& preset, Rng& rng, double eps) {
  switch (preset.kind) {
    case LossKind::Softmax: {
      const std::size_t k = 2 + rng.below(9), y = rng.below(k);
      const auto x = uniform_vector(rng, k, -5, 5);
      const auto out = plain_softmax_loss<double>(x, y);
      return grad_check<double>(
          [&](std::span<const double> v) { return plain_softmax_loss<double>(v, y).value; },
          out.grad, x, eps);
    }
    case LossKind::MarginSoftmax: {
      const auto& p = preset.margin;
      const std::size_t k = 2 + rng.below(9), y = rng.below(k);
      const auto x = uniform_vector(rng, k, -0.95, 0.95);
      const auto out = margin_softmax_loss<double>(x, y, p);
      return grad_check<double>(
          [&](std::span<const double> v) { return margin_softmax_loss<double>(v, y, p).value; },
          out.grad, x, eps);
    }
    case LossKind::SphereFace2: {
      SphereFace2Params p;
      p.lambda = rng.uniform(0.05, 0.95);
      p.t = rng.uniform(1.0, 5.0);
      p.s = rng.uniform(1.0, 40.0);
      p.m = rng.uniform(0.0, 0.5);
      p.margin_type = preset.sphereface2.margin_type;
      const std::size_t k = 1 + rng.below(10), y = rng.below(k);
      auto x = uniform_vector(rng, k, -0.95, 0.95);
      // Keep the shifted angle off the non-differentiable cap at pi.
      if (p.margin_type != MarginType::C && std::acos(x[y]) + p.m > std::numbers::pi - 1e-3)
        x[y] = 0.0;
      x.push_back(rng.uniform(-10, 10));
      const auto out = sphereface2_loss<double>(std::span<const double>(x).first(k), y, p, x[k]);
      std::vector<double> analytic(out.grad);
      analytic.push_back(out.grad_bias);
      return grad_check<double>(
          [&](std::span<const double> v) {
            return sphereface2_loss<double>(v.first(k), y, p, v[k]).value;
          },
          analytic, x, eps);
    }
    case LossKind::Prototypical: {
      const std::size_t n = 2 + rng.below(4), m = 2 + rng.below(3), d = 1 + rng.below(8);
      auto b = normal_batch(rng, n, m, d);
      for (auto& v : b.data) v *= 0.5;
      const auto out = prototypical_loss(b);
      return grad_check<double>(
          [&](std::span<const double> v) {
            ProtoBatch<double> c(n, m, d);
            c.data.assign(v.begin(), v.end());
            return prototypical_loss(c).value;
          },
          out.grad, b.data, eps);
    }
    case LossKind::AngularPrototypical: {
      const std::size_t n = 2 + rng.below(4), m = 2 + rng.below(3), d = 2 + rng.below(7);
      const auto b = normal_batch(rng, n, m, d);
      std::vector<double> x(b.data);
      x.push_back(rng.uniform(0.5, 15));
      x.push_back(rng.uniform(-5, 5));
      const auto out = angular_prototypical_loss(b, x[x.size() - 2], x.back());
      std::vector<double> analytic(out.grad);
      analytic.push_back(out.grad_scale);
      analytic.push_back(out.grad_bias);
      return grad_check<double>(
          [&](std::span<const double> v) {
            ProtoBatch<double> c(n, m, d);
            c.data.assign(v.begin(), v.end() - 2);
            return angular_prototypical_loss(c, v[v.size() - 2], v.back()).value;
          },
          analytic, x, eps);
    }
  }
  fail(ErrorKind::InvariantViolation, "unhandled loss kind");
}

}  // namespace detail

/// Largest relative gradient error of the named loss preset over `trials`
/// random inputs. Margin-softmax presets keep their fixed margin and scale;
/// SphereFace2 presets draw lambda, t, s, m and the bias at random.
inline double random_loss_grad_check(std::string_view preset, std::size_t trials, Rng rng,
                                     double eps = kGradCheckEps) {
  if (trials == 0) fail(ErrorKind::DomainError, "grad-check needs at least one trial");
  const LossSpec spec = loss_preset(preset);
  double worst = 0.0;
  for (std::size_t i = 0; i < trials; ++i) worst = std::max(worst, detail::check_one(spec, rng, eps));
  return worst;
}

}  // namespace sf2

#endif  // SF2_GRADCHECK_HPP
