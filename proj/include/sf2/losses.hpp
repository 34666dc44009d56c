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

#ifndef SF2_LOSSES_HPP
#define SF2_LOSSES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "sf2/core.hpp"
#include "sf2/error.hpp"

namespace sf2 {

/// Margin placement for the binary-classifier loss:
///   C  additive cosine margin on both sides (the default form),
///   A  angular margin cos(theta_y + m) on the positive side,
///   M  angular and additive margins together on the positive side.
enum class MarginType { C, A, M };

inline std::string_view to_string(MarginType t) {
  switch (t) {
    case MarginType::C: return "C";
    case MarginType::A: return "A";
    case MarginType::M: return "M";
  }
  return "?";
}

inline MarginType parse_margin_type(std::string_view s) {
  if (s == "C" || s == "c") return MarginType::C;
  if (s == "A" || s == "a") return MarginType::A;
  if (s == "M" || s == "m") return MarginType::M;
  fail(ErrorKind::InvalidConfig, "unknown margin type '" + std::string(s) + "' (expected C, A or M)");
}

struct SphereFace2Params {
  double lambda = 0.7;
  double t = 3.0;
  double s = 32.0;
  double m = 0.2;
  double bias_init = 0.0;
  MarginType margin_type = MarginType::C;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0))
      fail(ErrorKind::InvalidConfig, "sphereface2: lambda must lie in [0, 1]");
    if (!(t >= 1.0)) fail(ErrorKind::InvalidConfig, "sphereface2: t must be >= 1");
    if (!(s > 0.0)) fail(ErrorKind::InvalidConfig, "sphereface2: s must be > 0");
    if (!(m >= 0.0 && m < 1.0))
      fail(ErrorKind::InvalidConfig, "sphereface2: m must lie in [0, 1)");
    if (!std::isfinite(bias_init))
      fail(ErrorKind::InvalidConfig, "sphereface2: bias_init must be finite");
  }
};

/// psi(theta) = cos(m1 * theta + m2) - m3, target logit s * psi.
struct MarginSoftmaxParams {
  double m1 = 1.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double s = 32.0;

  void validate() const {
    if (!(m1 >= 1.0)) fail(ErrorKind::InvalidConfig, "margin softmax: m1 must be >= 1");
    if (!(m2 >= 0.0)) fail(ErrorKind::InvalidConfig, "margin softmax: m2 must be >= 0");
    if (!(m3 >= 0.0)) fail(ErrorKind::InvalidConfig, "margin softmax: m3 must be >= 0");
    if (!(s > 0.0)) fail(ErrorKind::InvalidConfig, "margin softmax: s must be > 0");
  }
};

/// Loss value with gradients. `grad` is taken w.r.t. the function's primary
/// input (cosines, logits or embeddings); the scalars cover the learnable
/// bias and scale where the loss has them.
template <Real T>
struct LossOutput {
  T value = T(0);
  std::vector<T> grad;
  T grad_bias = T(0);
  T grad_scale = T(0);
};

/// log(1 + e^x) without overflow.
template <Real T>
T softplus(T x) {
  return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
}

template <Real T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <Real T>
T log_sum_exp(std::span<const T> z) {
  const T hi = *std::max_element(z.begin(), z.end());
  if (!std::isfinite(hi)) return hi;
  T acc = T(0);
  for (T v : z) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

inline constexpr double kCosineTolerance = 1e-6;

template <Real T>
T clamp_cosine(T z) {
  if (!(z >= T(-1) - T(kCosineTolerance) && z <= T(1) + T(kCosineTolerance)))
    fail(ErrorKind::DomainError, "cosine value " + std::to_string(z) + " outside [-1, 1]");
  return std::clamp(z, T(-1), T(1));
}

template <Real T>
struct GMap {
  T value;
  T deriv;
};

/// Similarity adjustment g(z) = 2((z + 1)/2)^t - 1 and its derivative.
template <Real T>
GMap<T> g_map(T z, T t) {
  if (!(t >= T(1))) fail(ErrorKind::DomainError, "g_map: t must be >= 1");
  const T u = (clamp_cosine(z) + T(1)) / T(2);
  if (t == T(1)) return {T(2) * u - T(1), T(1)};
  const T p = std::pow(u, t - T(1));
  return {T(2) * p * u - T(1), t * p};
}

namespace detail {

template <Real T>
void check_label(std::size_t k, std::size_t label) {
  if (k == 0) fail(ErrorKind::DomainError, "loss: need at least one class");
  if (label >= k)
    fail(ErrorKind::DomainError,
         "loss: label " + std::to_string(label) + " out of range for " + std::to_string(k) +
             " classes");
}

template <Real T>
void check_output(const LossOutput<T>& out) {
  if (!std::isfinite(out.value) || !all_finite(std::span<const T>(out.grad)) ||
      !std::isfinite(out.grad_bias) || !std::isfinite(out.grad_scale))
    fail(ErrorKind::NonFinite, "loss produced a non-finite value or gradient");
}

// cos(theta + m) with theta + m capped at pi, and its derivative in cos(theta).
template <Real T>
std::pair<T, T> angular_shift(T c, T m) {
  const T theta = safe_acos(c);
  const T phi = theta + m;
  if (phi >= std::numbers::pi_v<T>) return {T(-1), T(0)};
  return {std::cos(phi), std::sin(phi) / std::sin(theta)};
}

// Cross-entropy -log softmax(z)_y as softplus(lse_{j != y} z_j - z_y), which
// keeps full relative precision when the loss is tiny. Returns dL/dz.
template <Real T>
std::pair<T, std::vector<T>> cross_entropy(std::span<const T> z, std::size_t label) {
  std::vector<T> grad(z.size(), T(0));
  if (z.size() == 1) return {T(0), grad};
  std::vector<T> rest;
  rest.reserve(z.size() - 1);
  for (std::size_t j = 0; j < z.size(); ++j)
    if (j != label) rest.push_back(z[j]);
  const T lse_rest = log_sum_exp<T>(rest);
  const T gap = lse_rest - z[label];
  const T p_wrong = sigmoid(gap);  // 1 - p_y
  for (std::size_t j = 0; j < z.size(); ++j)
    grad[j] = (j == label) ? -p_wrong : std::exp(z[j] - lse_rest) * p_wrong;
  return {softplus(gap), std::move(grad)};
}

}  // namespace detail

/// Sum of K one-vs-rest logistic losses on scaled, adjusted cosines sharing a
/// single bias. Gradients are w.r.t. the cosines and the bias.
template <Real T>
LossOutput<T> sphereface2_loss(std::span<const T> cosines, std::size_t label,
                               const SphereFace2Params& params, T bias) {
  params.validate();
  detail::check_label<T>(cosines.size(), label);
  const T lambda = T(params.lambda);
  const T s = T(params.s);
  const T m = T(params.m);
  const T t = T(params.t);

  LossOutput<T> out;
  out.grad.assign(cosines.size(), T(0));

  {
    const T c = clamp_cosine(cosines[label]);
    T z = c;
    T dz = T(1);
    T additive = m;
    if (params.margin_type != MarginType::C) {
      std::tie(z, dz) = detail::angular_shift(c, m);
      if (params.margin_type == MarginType::A) additive = T(0);
    }
    const auto g = g_map(z, t);
    const T logit = s * (g.value - additive) + bias;
    out.value += lambda * softplus(-logit);
    const T dlogit = -lambda * sigmoid(-logit);
    out.grad[label] = dlogit * s * g.deriv * dz;
    out.grad_bias += dlogit;
  }

  const T neg_weight = T(1) - lambda;
  for (std::size_t j = 0; j < cosines.size(); ++j) {
    if (j == label) continue;
    const auto g = g_map(clamp_cosine(cosines[j]), t);
    const T logit = s * (g.value + m) + bias;
    out.value += neg_weight * softplus(logit);
    const T dlogit = neg_weight * sigmoid(logit);
    out.grad[j] = dlogit * s * g.deriv;
    out.grad_bias += dlogit;
  }
  detail::check_output(out);
  return out;
}

/// Cross-entropy over logits s * psi(theta_y) and s * cos(theta_j).
template <Real T>
LossOutput<T> margin_softmax_loss(std::span<const T> cosines, std::size_t label,
                                  const MarginSoftmaxParams& params) {
  params.validate();
  detail::check_label<T>(cosines.size(), label);
  const T s = T(params.s);
  const std::size_t k = cosines.size();

  std::vector<T> logits(k);
  for (std::size_t j = 0; j < k; ++j) logits[j] = s * clamp_cosine(cosines[j]);

  // psi and dpsi/dcos for the target
  const T c = clamp_cosine(cosines[label]);
  T psi;
  T dpsi;
  if (params.m1 == 1.0 && params.m2 == 0.0) {
    psi = c - T(params.m3);
    dpsi = T(1);
  } else {
    const T theta = safe_acos(c);
    const T arg = T(params.m1) * theta + T(params.m2);
    psi = std::cos(arg) - T(params.m3);
    dpsi = T(params.m1) * std::sin(arg) / std::sin(theta);
  }
  logits[label] = s * psi;

  LossOutput<T> out;
  std::tie(out.value, out.grad) = detail::cross_entropy<T>(logits, label);
  for (std::size_t j = 0; j < k; ++j) out.grad[j] *= (j == label) ? s * dpsi : s;
  detail::check_output(out);
  return out;
}

/// Standard cross-entropy; gradient is w.r.t. the logits.
template <Real T>
LossOutput<T> plain_softmax_loss(std::span<const T> logits, std::size_t label) {
  detail::check_label<T>(logits.size(), label);
  require_finite(logits, "softmax logits");
  LossOutput<T> out;
  std::tie(out.value, out.grad) = detail::cross_entropy(logits, label);
  detail::check_output(out);
  return out;
}

/// N speakers x M utterances x d features; utterance M-1 of each speaker is
/// the query, the rest form the support set.
template <Real T>
struct ProtoBatch {
  std::size_t speakers = 0;
  std::size_t utterances = 0;
  std::size_t dim = 0;
  std::vector<T> data;

  ProtoBatch() = default;
  ProtoBatch(std::size_t n, std::size_t m, std::size_t d)
      : speakers(n), utterances(m), dim(d), data(n * m * d, T(0)) {}

  std::span<T> at(std::size_t spk, std::size_t utt) {
    return {data.data() + (spk * utterances + utt) * dim, dim};
  }
  std::span<const T> at(std::size_t spk, std::size_t utt) const {
    return {data.data() + (spk * utterances + utt) * dim, dim};
  }

  void validate() const {
    if (speakers < 2 || utterances < 2)
      fail(ErrorKind::DegenerateBatch, "prototypical batch needs N >= 2 speakers and M >= 2 "
                                       "utterances (got N=" + std::to_string(speakers) +
                                           ", M=" + std::to_string(utterances) + ")");
    if (data.size() != speakers * utterances * dim)
      fail(ErrorKind::InvariantViolation, "prototypical batch storage does not match shape");
  }
};

namespace detail {

template <Real T>
Matrix<T> prototypes(const ProtoBatch<T>& batch) {
  const std::size_t support = batch.utterances - 1;
  Matrix<T> c(batch.speakers, batch.dim);
  for (std::size_t k = 0; k < batch.speakers; ++k) {
    auto row = c.row(k);
    for (std::size_t u = 0; u < support; ++u) {
      const auto x = batch.at(k, u);
      for (std::size_t i = 0; i < batch.dim; ++i) row[i] += x[i];
    }
    for (auto& v : row) v /= T(support);
  }
  return c;
}

// Mean cross-entropy of each query against all prototypes given the
// similarity matrix; returns the value and dL/dS.
template <Real T>
T proto_cross_entropy(const Matrix<T>& sim, Matrix<T>& dsim) {
  const std::size_t n = sim.rows();
  dsim = Matrix<T>(n, n);
  T value = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    const T lse = log_sum_exp(sim.row(i));
    value += lse - sim(i, i);
    for (std::size_t k = 0; k < n; ++k)
      dsim(i, k) = (std::exp(sim(i, k) - lse) - (i == k ? T(1) : T(0))) / T(n);
  }
  return value / T(n);
}

}  // namespace detail

/// Softmax over negated squared Euclidean distances from each query to every
/// prototype.
template <Real T>
LossOutput<T> prototypical_loss(const ProtoBatch<T>& batch) {
  batch.validate();
  require_finite(std::span<const T>(batch.data), "prototypical batch");
  const std::size_t n = batch.speakers;
  const std::size_t d = batch.dim;
  const std::size_t query = batch.utterances - 1;
  const Matrix<T> c = detail::prototypes(batch);

  Matrix<T> sim(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto q = batch.at(i, query);
    for (std::size_t k = 0; k < n; ++k) {
      T d2 = T(0);
      for (std::size_t a = 0; a < d; ++a) {
        const T diff = q[a] - c(k, a);
        d2 += diff * diff;
      }
      sim(i, k) = -d2;
    }
  }
  Matrix<T> dsim;
  LossOutput<T> out;
  out.value = detail::proto_cross_entropy(sim, dsim);

  out.grad.assign(batch.data.size(), T(0));
  Matrix<T> dproto(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto q = batch.at(i, query);
    T* gq = out.grad.data() + (i * batch.utterances + query) * d;
    for (std::size_t k = 0; k < n; ++k) {
      const T w = T(2) * dsim(i, k);
      for (std::size_t a = 0; a < d; ++a) {
        const T diff = q[a] - c(k, a);
        gq[a] -= w * diff;
        dproto(k, a) += w * diff;
      }
    }
  }
  const T share = T(1) / T(query);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t u = 0; u < query; ++u) {
      T* gx = out.grad.data() + (k * batch.utterances + u) * d;
      for (std::size_t a = 0; a < d; ++a) gx[a] += dproto(k, a) * share;
    }
  detail::check_output(out);
  return out;
}

/// Prototypical loss with similarity w * cos(query, prototype) + b.
/// grad_scale and grad_bias carry dL/dw and dL/db.
template <Real T>
LossOutput<T> angular_prototypical_loss(const ProtoBatch<T>& batch, T w, T b) {
  batch.validate();
  if (!(w > T(0))) fail(ErrorKind::DomainError, "angular prototypical: w must be > 0");
  require_finite(std::span<const T>(batch.data), "prototypical batch");
  const std::size_t n = batch.speakers;
  const std::size_t d = batch.dim;
  const std::size_t query = batch.utterances - 1;
  const Matrix<T> c = detail::prototypes(batch);

  std::vector<T> qnorm(n), cnorm(n);
  for (std::size_t i = 0; i < n; ++i) {
    qnorm[i] = norm2(batch.at(i, query));
    cnorm[i] = norm2(c.row(i));
    if (qnorm[i] <= T(kZeroNorm) || cnorm[i] <= T(kZeroNorm))
      fail(ErrorKind::ZeroVector, "angular prototypical: zero-norm query or prototype");
  }
  Matrix<T> cosm(n, n);
  Matrix<T> sim(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      cosm(i, k) = dot(batch.at(i, query), c.row(k)) / (qnorm[i] * cnorm[k]);
      sim(i, k) = w * cosm(i, k) + b;
    }

  Matrix<T> dsim;
  LossOutput<T> out;
  out.value = detail::proto_cross_entropy(sim, dsim);
  out.grad.assign(batch.data.size(), T(0));
  Matrix<T> dproto(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto q = batch.at(i, query);
    T* gq = out.grad.data() + (i * batch.utterances + query) * d;
    for (std::size_t k = 0; k < n; ++k) {
      const T g = dsim(i, k);
      out.grad_scale += g * cosm(i, k);
      out.grad_bias += g;
      const T gc = g * w;  // dL/dcos
      for (std::size_t a = 0; a < d; ++a) {
        gq[a] += gc * (c(k, a) / (qnorm[i] * cnorm[k]) - cosm(i, k) * q[a] / (qnorm[i] * qnorm[i]));
        dproto(k, a) +=
            gc * (q[a] / (qnorm[i] * cnorm[k]) - cosm(i, k) * c(k, a) / (cnorm[k] * cnorm[k]));
      }
    }
  }
  const T share = T(1) / T(query);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t u = 0; u < query; ++u) {
      T* gx = out.grad.data() + (k * batch.utterances + u) * d;
      for (std::size_t a = 0; a < d; ++a) gx[a] += dproto(k, a) * share;
    }
  detail::check_output(out);
  return out;
}

}  // namespace sf2

#endif  // SF2_LOSSES_HPP
